import threading
import time

import pytest
import uvicorn

from adrelight_sidecar import ServiceConfig, create_app


class LiveServer:
    """Echo-mode service bound to an OS-assigned port, run in a thread."""

    def __init__(self):
        app = create_app(ServiceConfig(echo=True))
        self.server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        )
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.thread.start()
        deadline = time.monotonic() + 10.0
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("sidecar server did not start within 10s")
            time.sleep(0.02)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{port}"

    def close(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture(scope="session")
def live_echo_server():
    server = LiveServer()
    yield server
    server.close()

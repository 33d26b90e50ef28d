"""Minimal threaded JSON-over-HTTP server shared by the bridges."""

import json
import logging
import traceback
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from marker_clip import BridgeError


def serve(host, port, get_routes, post_routes):
    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status, doc):
            body = json.dumps(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _dispatch(self, routes, payload):
            route = routes.get(self.path)
            if route is None:
                return self._reply(404, {"error": "InvalidArgument", "message": f"no route {self.path}"})
            try:
                self._reply(200, route(payload))
            except BridgeError as e:
                self._reply(400, {"error": e.code, "message": str(e)})
            except (KeyError, TypeError, ValueError) as e:
                self._reply(400, {"error": "InvalidArgument", "message": repr(e)})
            except Exception as e:  # noqa: BLE001
                logging.error("%s", traceback.format_exc())
                self._reply(500, {"error": "BackendUnavailable", "message": repr(e)})

        def do_GET(self):
            self._dispatch(get_routes, None)

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError as e:
                return self._reply(400, {"error": "InvalidArgument", "message": str(e)})
            self._dispatch(post_routes, payload)

        def log_message(self, fmt, *args):
            logging.info("%s " + fmt, self.address_string(), *args)

    server = ThreadingHTTPServer((host, port), Handler)
    logging.info("listening on http://%s:%d", host, server.server_address[1])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

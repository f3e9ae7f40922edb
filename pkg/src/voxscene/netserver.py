"""Network transports around one Session sequencer.

Two channels speak the same JSON protocol: WebSocket (one message per
frame) for the browser viewer, and newline-delimited JSON over raw TCP for
headless clients. All inbound traffic funnels into a single ordered action
queue, so arrival order at the queue is the authoritative op order. Mesh
geometry is served out-of-band: a fetch_mesh request is answered with a
binary frame of 8-byte little-endian mesh id followed by binary STL (on
TCP, prefixed by a {"t":"mesh_data_header","mesh":id,"bytes":n} line).
"""

from __future__ import annotations

import asyncio
import json
import logging
import mimetypes
from pathlib import Path
from typing import Optional

from aiohttp import WSMsgType, web

from .meshio import MeshFormat, write_stl
from .protocol import (
    FetchMesh,
    Hello,
    MalformedMessage,
    OpRejected,
    ProtocolError,
    decode,
    encode,
    pack_mesh_frame,
)
from .session import Delivery, Session

logger = logging.getLogger(__name__)

MAX_LINE_BYTES = 16 * 1024 * 1024


class SceneServer:
    """Hosts one Session over WebSocket + TCP, plus the static viewer."""

    def __init__(self, session: Session, token: str = "", viewer_dir: Optional[Path] = None):
        self.session = session
        self.token = token
        self.viewer_dir = Path(viewer_dir) if viewer_dir else None
        self._actions: asyncio.Queue = asyncio.Queue()
        self._outboxes: dict[int, asyncio.Queue] = {}
        self._mesh_bytes: dict[int, bytes] = {}
        self._sequencer_task: Optional[asyncio.Task] = None
        self._tcp_server = None
        self._runner = None

    # ------------------------------------------------------------ sequencer

    async def _sequencer(self):
        while True:
            kind, payload = await self._actions.get()
            try:
                if kind == "connect":
                    name, outbox, fut = payload
                    cid, deliveries = self.session.connect(name)
                    self._outboxes[cid] = outbox
                    self._route(deliveries)
                    fut.set_result(cid)
                elif kind == "op":
                    cid, op = payload
                    self._route(self.session.apply(cid, op))
                elif kind == "fetch":
                    cid, req = payload
                    self._send_mesh(cid, req)
                elif kind == "disconnect":
                    (cid,) = payload
                    self._outboxes.pop(cid, None)
                    self._route(self.session.disconnect(cid))
                elif kind == "stop":
                    return
            except Exception:
                logger.exception("sequencer action %s failed", kind)

    def _route(self, deliveries: list[Delivery]):
        for d in deliveries:
            frame = ("text", encode(d.event))
            if d.to is None:
                for outbox in self._outboxes.values():
                    outbox.put_nowait(frame)
            else:
                outbox = self._outboxes.get(d.to)
                if outbox is not None:
                    outbox.put_nowait(frame)

    def _send_mesh(self, cid: int, req: FetchMesh):
        outbox = self._outboxes.get(cid)
        if outbox is None:
            return
        mesh = self.session.scene.meshes.get(req.mesh)
        if mesh is None:
            ev = OpRejected(rev=self.session.scene.revision, origin=cid,
                            seq=req.seq, reason="UnknownObject", detail=f"mesh {req.mesh}")
            outbox.put_nowait(("text", encode(ev)))
            return
        if req.mesh not in self._mesh_bytes:
            self._mesh_bytes[req.mesh] = write_stl(mesh, MeshFormat.STL_BINARY)
        outbox.put_nowait(("binary", pack_mesh_frame(req.mesh, self._mesh_bytes[req.mesh])))

    async def _submit(self, kind: str, payload) -> None:
        await self._actions.put((kind, payload))

    async def _handshake(self, name: str) -> tuple[int, asyncio.Queue]:
        outbox: asyncio.Queue = asyncio.Queue()
        fut = asyncio.get_running_loop().create_future()
        await self._submit("connect", (name, outbox, fut))
        cid = await fut
        return cid, outbox

    # ------------------------------------------------------------ websocket

    async def _ws_handler(self, request: web.Request) -> web.WebSocketResponse:
        if self.token and request.query.get("token", "") != self.token:
            raise web.HTTPForbidden(text="bad session token")
        ws = web.WebSocketResponse(heartbeat=30)
        await ws.prepare(request)

        cid: Optional[int] = None
        writer: Optional[asyncio.Task] = None
        try:
            first = await ws.receive()
            if first.type != WSMsgType.TEXT:
                await ws.close()
                return ws
            hello = decode(first.data.encode("utf-8"))
            if not isinstance(hello, Hello):
                await ws.close()
                return ws
            cid, outbox = await self._handshake(hello.name)

            async def pump():
                while True:
                    kind, data = await outbox.get()
                    if kind == "text":
                        await ws.send_str(data.decode("utf-8"))
                    else:
                        await ws.send_bytes(data)

            writer = asyncio.create_task(pump())

            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                await self._dispatch_frame(cid, msg.data.encode("utf-8"))
        except ProtocolError as e:
            logger.info("ws client error: %s", e)
        finally:
            if writer is not None:
                writer.cancel()
            if cid is not None:
                await self._submit("disconnect", (cid,))
        return ws

    async def _dispatch_frame(self, cid: int, data: bytes):
        try:
            msg = decode(data)
        except ProtocolError as e:
            ev = OpRejected(rev=self.session.scene.revision, origin=cid,
                            seq=0, reason="BadPayload", detail=str(e))
            outbox = self._outboxes.get(cid)
            if outbox is not None:
                outbox.put_nowait(("text", encode(ev)))
            return
        if isinstance(msg, FetchMesh):
            await self._submit("fetch", (cid, msg))
        elif isinstance(msg, Hello):
            pass  # duplicate hello is a no-op
        else:
            await self._submit("op", (cid, msg))

    # ------------------------------------------------------------ raw TCP

    async def _tcp_handler(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        cid: Optional[int] = None
        pump_task: Optional[asyncio.Task] = None
        try:
            line = await reader.readline()
            if not line:
                return
            hello = decode(line.rstrip(b"\n"))
            if not isinstance(hello, Hello):
                writer.write(b'{"t":"op_rejected","rev":0,"origin":0,"seq":0,"reason":"BadPayload","detail":"expected hello"}\n')
                await writer.drain()
                return
            if self.token and hello.token != self.token:
                writer.write(b'{"t":"op_rejected","rev":0,"origin":0,"seq":0,"reason":"BadPayload","detail":"bad session token"}\n')
                await writer.drain()
                return
            cid, outbox = await self._handshake(hello.name)

            async def pump():
                while True:
                    kind, data = await outbox.get()
                    if kind == "text":
                        writer.write(data + b"\n")
                    else:
                        header = json.dumps(
                            {"t": "mesh_data_header",
                             "mesh": int.from_bytes(data[:8], "little"),
                             "bytes": len(data)}).encode()
                        writer.write(header + b"\n" + data)
                    await writer.drain()

            pump_task = asyncio.create_task(pump())

            while True:
                line = await reader.readline()
                if not line:
                    break
                if len(line) > MAX_LINE_BYTES:
                    break
                line = line.strip()
                if line:
                    await self._dispatch_frame(cid, line)
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        except ProtocolError as e:
            logger.info("tcp client %s error: %s", peer, e)
        finally:
            if pump_task is not None:
                pump_task.cancel()
            if cid is not None:
                await self._submit("disconnect", (cid,))
            writer.close()

    # ------------------------------------------------------------ static viewer

    async def _viewer_handler(self, request: web.Request) -> web.Response:
        if self.viewer_dir is None or not self.viewer_dir.is_dir():
            return web.Response(
                status=503,
                text="viewer bundle not built; run the frontend build and pass --viewer-dir",
            )
        tail = request.match_info.get("tail", "") or "index.html"
        path = (self.viewer_dir / tail).resolve()
        if not str(path).startswith(str(self.viewer_dir.resolve())) or not path.is_file():
            raise web.HTTPNotFound()
        ctype = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        return web.Response(body=path.read_bytes(), content_type=ctype)

    async def _index_redirect(self, request: web.Request):
        raise web.HTTPFound("/viewer/")

    # ------------------------------------------------------------ lifecycle

    def build_app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/ws", self._ws_handler)
        app.router.add_get("/", self._index_redirect)
        app.router.add_get("/viewer", self._index_redirect)
        app.router.add_get("/viewer/", self._viewer_handler)
        app.router.add_get("/viewer/{tail:.*}", self._viewer_handler)
        return app

    async def start(self, bind: str, port: int, tcp_port: int):
        self._sequencer_task = asyncio.create_task(self._sequencer())
        self._runner = web.AppRunner(self.build_app())
        await self._runner.setup()
        site = web.TCPSite(self._runner, bind, port)
        await site.start()
        self._tcp_server = await asyncio.start_server(
            self._tcp_handler, bind, tcp_port, limit=MAX_LINE_BYTES)
        logger.info("serving ws+http on %s:%d, tcp on %s:%d", bind, port, bind, tcp_port)

    async def stop(self):
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._runner is not None:
            await self._runner.cleanup()
        if self._sequencer_task is not None:
            await self._submit("stop", ())
            await self._sequencer_task

    async def serve_forever(self, bind: str, port: int, tcp_port: int):
        await self.start(bind, port, tcp_port)
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()

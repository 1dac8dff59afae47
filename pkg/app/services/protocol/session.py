"""Session orchestration: drive Alice and Bob over a transport, or locally."""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass

import numpy as np

from app.exceptions import FrameDecodeError, GubqcError, ProtocolError, TransportError
from app.schemas.subgroup import SubgroupSpec
from app.services.protocol.alice import AliceSession, CorrectionRule, correction_bits
from app.services.protocol.bob import BobSession
from app.services.protocol.messages import Outcomes, ProtocolMessage
from app.services.protocol.models import Computation, SecretKey
from app.services.protocol.transcript import SessionTranscript, format_result
from app.services.protocol.transport import InProcessTransport, StreamTransport, Transport
from app.services.protocol.wire import decode_frame, encode_message
from app.services.qsim import PROBABILITY_FLOOR, Bits, StateVector

logger = logging.getLogger(__name__)

SessionOutput = Bits | StateVector


async def _send(transport: Transport, msg: ProtocolMessage, transcript: SessionTranscript | None = None):
    frame = encode_message(msg)
    if transcript is not None:
        transcript.record(frame)
    logger.debug("-> %s", type(msg).__name__)
    await transport.send(frame)


async def _recv(transport: Transport) -> tuple[bytes, ProtocolMessage]:
    offset, frame = await transport.recv()
    try:
        msg, _ = decode_frame(frame)
    except FrameDecodeError as exc:
        raise FrameDecodeError(exc.reason, offset + exc.offset) from None
    logger.debug("<- %s", type(msg).__name__)
    return frame, msg


async def drive_alice(alice: AliceSession, transport: Transport, transcript: SessionTranscript) -> SessionOutput:
    try:
        for msg in alice.open():
            await _send(transport, msg, transcript)
        while not alice.done:
            frame, msg = await _recv(transport)
            transcript.record(frame)
            for reply in alice.receive(msg):
                await _send(transport, reply, transcript)
    finally:
        await transport.close()
    return alice.result


async def serve_bob_session(transport: Transport, bob_seed: int, offload: bool = False) -> None:
    """Run one server-side session to completion over ``transport``."""
    bob = BobSession(np.random.default_rng(bob_seed))
    try:
        while not bob.done:
            _, msg = await _recv(transport)
            if offload:
                replies = await asyncio.to_thread(bob.receive, msg)
            else:
                replies = bob.receive(msg)
            for reply in replies:
                await _send(transport, reply)
    finally:
        await transport.close()


def _first_failure(results) -> BaseException | None:
    failures = [r for r in results if isinstance(r, BaseException)]
    # A closed transport on one side is usually the echo of a real error on the other.
    for exc in failures:
        if not isinstance(exc, TransportError):
            return exc
    return failures[0] if failures else None


async def run_session(
    comp: Computation,
    spec: SubgroupSpec,
    alice_seed: int,
    bob_seed: int,
    transport: Transport | None = None,
) -> tuple[SessionOutput, SessionTranscript]:
    """One full session. Without ``transport`` Bob runs in-process alongside Alice."""
    comp.check_subgroup(spec)
    alice = AliceSession(comp, spec, np.random.default_rng(alice_seed))
    transcript = SessionTranscript(comp.n, comp.m, comp.output_mode, alice_seed, bob_seed)

    if transport is None:
        alice_end, bob_end = InProcessTransport.pair()
        results = await asyncio.gather(
            drive_alice(alice, alice_end, transcript),
            serve_bob_session(bob_end, bob_seed),
            return_exceptions=True,
        )
        failure = _first_failure(results)
        if failure is not None:
            raise failure
        output = results[0]
    else:
        output = await drive_alice(alice, transport, transcript)

    transcript.result = format_result(output)
    transcript.check()
    logger.info(
        "session n=%d m=%d %s finished: %s", comp.n, comp.m, comp.output_mode.value, transcript.result
    )
    return output, transcript


async def start_bob_server(
    host: str,
    port: int,
    bob_seed: int,
    concurrent: bool = False,
    on_session_end=None,
) -> asyncio.AbstractServer:
    """Listen for Alice. One session per connection; sessions run one at a time unless ``concurrent``."""
    lock = asyncio.Lock()

    async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        transport = StreamTransport(reader, writer)
        try:
            if concurrent:
                await serve_bob_session(transport, bob_seed, offload=True)
            else:
                async with lock:
                    await serve_bob_session(transport, bob_seed)
            logger.info("session with %s completed (bob seed %d)", peer, bob_seed)
        except GubqcError as exc:
            logger.warning("session with %s aborted: %s", peer, exc)
        finally:
            if on_session_end is not None:
                on_session_end()

    server = await asyncio.start_server(handle, host, port)
    logger.info("Bob listening on %s:%d (concurrent=%s)", host, port, concurrent)
    return server


async def serve_bob(
    host: str,
    port: int,
    bob_seed: int,
    concurrent: bool = False,
    max_sessions: int | None = None,
) -> None:
    finished = asyncio.Event()
    count = 0

    def session_ended():
        nonlocal count
        count += 1
        if max_sessions is not None and count >= max_sessions:
            finished.set()

    server = await start_bob_server(host, port, bob_seed, concurrent, session_ended)
    async with server:
        if max_sessions is None:
            await server.serve_forever()
        else:
            await finished.wait()


async def connect_alice(
    comp: Computation,
    spec: SubgroupSpec,
    host: str,
    port: int,
    alice_seed: int,
    bob_seed: int,
) -> tuple[SessionOutput, SessionTranscript]:
    transport = await StreamTransport.connect(host, port)
    return await run_session(comp, spec, alice_seed, bob_seed, transport)


@dataclass(frozen=True)
class SessionBranch:
    probability: float
    output: SessionOutput
    outcomes: tuple[Bits, ...]


def enumerate_branches(
    comp: Computation,
    spec: SubgroupSpec,
    key: SecretKey,
    correction: CorrectionRule = correction_bits,
) -> list[SessionBranch]:
    """Every measurement branch of a session under a fixed key, with its probability."""
    alice = AliceSession(comp, spec, key=key, correction=correction)
    stack = [(1.0, alice, BobSession(), alice.open(), ())]
    branches: list[SessionBranch] = []

    while stack:
        p, alice, bob, queue, outcomes = stack.pop()
        forked = False
        while queue:
            msg, queue = queue[0], queue[1:]
            if bob.measures(msg):
                for q, twin, replies in bob.fork(msg):
                    if q <= PROBABILITY_FLOOR:
                        continue
                    a = alice.fork()
                    sent = [out for reply in replies for out in a.receive(reply)]
                    seen = tuple(r.bits for r in replies if isinstance(r, Outcomes))
                    stack.append((p * q, a, twin, queue + sent, outcomes + seen))
                forked = True
                break
            for reply in bob.receive(msg):
                queue = queue + alice.receive(reply)
        if not forked:
            if not alice.done:
                raise ProtocolError("local session stalled before Alice finished")
            branches.append(SessionBranch(p, alice.result, outcomes))
    return branches


def drive_local(
    comp: Computation,
    spec: SubgroupSpec,
    key: SecretKey,
    bob_rng: np.random.Generator,
    correction: CorrectionRule = correction_bits,
) -> SessionOutput:
    """One sampled session, message objects passed directly between the machines."""
    alice = AliceSession(comp, spec, key=key, correction=correction)
    bob = BobSession(bob_rng)
    queue = list(alice.open())
    while queue:
        msg = queue.pop(0)
        for reply in bob.receive(msg):
            queue.extend(alice.receive(reply))
    if not alice.done:
        raise ProtocolError("local session stalled before Alice finished")
    return alice.result

import asyncio

import numpy as np
import pytest

from app.exceptions import FrameDecodeError, TransportError
from app.schemas.subgroup import SubgroupSpec
from app.services.protocol import Computation, Hello, OutputMode, Outcomes
from app.services.protocol.session import connect_alice, run_session, serve_bob, start_bob_server
from app.services.protocol.transport import InProcessTransport, StreamTransport
from app.services.protocol.wire import HEADER, encode_message

HOST = "127.0.0.1"


async def _loopback(comp, spec, alice_seed, bob_seed):
    server = await start_bob_server(HOST, 0, bob_seed)
    port = server.sockets[0].getsockname()[1]
    async with server:
        return await connect_alice(comp, spec, HOST, port, alice_seed, bob_seed)


def test_loopback_identity_session(q8):
    output, transcript = asyncio.run(_loopback(Computation.identity(1, 1), q8, 3, 4))
    assert output == (0,)
    transcript.check()


def test_both_transports_give_identical_transcripts(q8, rng):
    comp = Computation.random(2, 3, q8, rng, OutputMode.QUANTUM)
    _, over_socket = asyncio.run(_loopback(comp, q8, 21, 22))
    _, in_process = asyncio.run(run_session(comp, q8, 21, 22))
    assert over_socket.digest() == in_process.digest()
    assert over_socket.result == in_process.result


@pytest.mark.parametrize("seed", range(10))
def test_transports_agree_on_random_configs(seed):
    draw = np.random.default_rng(seed)
    n, m = int(draw.integers(1, 3)), int(draw.integers(1, 4))
    spec = SubgroupSpec(kind="discrete", block_size=1, order=int(draw.choice([2, 8])))
    mode = OutputMode.QUANTUM if draw.integers(2) else OutputMode.CLASSICAL
    comp = Computation.random(n, m, spec, draw, mode)
    alice_seed, bob_seed = (int(s) for s in draw.integers(0, 2**32, size=2))
    _, over_socket = asyncio.run(_loopback(comp, spec, alice_seed, bob_seed))
    _, in_process = asyncio.run(run_session(comp, spec, alice_seed, bob_seed))
    assert over_socket.digest() == in_process.digest()
    assert over_socket.result == in_process.result


def test_connection_refused():
    async def scenario():
        server = await asyncio.start_server(lambda r, w: None, HOST, 0)
        port = server.sockets[0].getsockname()[1]
        server.close()
        await server.wait_closed()
        await StreamTransport.connect(HOST, port)

    with pytest.raises(TransportError, match="cannot reach"):
        asyncio.run(scenario())


def test_truncated_frame_from_peer_names_offset(q8):
    first = encode_message(Outcomes(1, (0,)))
    second = encode_message(Outcomes(2, (0,)))

    async def rogue_bob(reader, writer):
        writer.write(first + second[:-2])
        await writer.drain()
        writer.write_eof()
        await reader.read()
        writer.close()

    async def scenario():
        server = await asyncio.start_server(rogue_bob, HOST, 0)
        port = server.sockets[0].getsockname()[1]
        async with server:
            await connect_alice(Computation.identity(1, 2), q8, HOST, port, 0, 0)

    with pytest.raises(FrameDecodeError) as info:
        asyncio.run(scenario())
    assert info.value.offset == len(first)


def test_stream_recv_offsets_and_eof():
    frames = [encode_message(Hello(1, 1, OutputMode.CLASSICAL)), encode_message(Outcomes(1, (1,)))]

    async def scenario():
        reader = asyncio.StreamReader()
        reader.feed_data(b"".join(frames))
        reader.feed_eof()
        transport = StreamTransport(reader, None)
        got = [await transport.recv(), await transport.recv()]
        with pytest.raises(TransportError, match="closed"):
            await transport.recv()
        return got

    got = asyncio.run(scenario())
    assert got == [(0, frames[0]), (len(frames[0]), frames[1])]


def test_oversized_length_is_refused():
    async def scenario():
        reader = asyncio.StreamReader()
        reader.feed_data(HEADER.pack(2**31, 2))
        reader.feed_eof()
        await StreamTransport(reader, None).recv()

    with pytest.raises(FrameDecodeError, match="frame limit"):
        asyncio.run(scenario())


def test_in_process_close_reaches_peer():
    async def scenario():
        a, b = InProcessTransport.pair()
        await a.send(b"frame")
        await a.close()
        assert await b.recv() == (0, b"frame")
        with pytest.raises(TransportError):
            await b.recv()
        with pytest.raises(TransportError):
            await a.send(b"late")

    asyncio.run(scenario())


@pytest.mark.parametrize("concurrent", [False, True])
def test_serve_bob_stops_after_session_count(q8, rng, concurrent):
    comp = Computation.random(1, 2, q8, rng)

    async def connect_when_ready(port, alice_seed):
        for _ in range(100):
            try:
                return await connect_alice(comp, q8, HOST, port, alice_seed, 5)
            except TransportError:
                await asyncio.sleep(0.02)
        raise AssertionError("server never came up")

    async def scenario():
        closed_server = await asyncio.start_server(lambda r, w: None, HOST, 0)
        port = closed_server.sockets[0].getsockname()[1]
        closed_server.close()
        await closed_server.wait_closed()

        server = asyncio.create_task(serve_bob(HOST, port, 5, concurrent, max_sessions=2))
        results = await asyncio.gather(connect_when_ready(port, 1), connect_when_ready(port, 2))
        await asyncio.wait_for(server, timeout=5)
        return results

    results = asyncio.run(scenario())
    for alice_seed, (output, transcript) in zip((1, 2), results):
        expected_output, expected = asyncio.run(run_session(comp, q8, alice_seed, 5))
        assert output == expected_output
        assert transcript.digest() == expected.digest()

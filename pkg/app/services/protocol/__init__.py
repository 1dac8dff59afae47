from app.services.protocol.alice import (
    AliceSession,
    alice_final_correction,
    alice_instruction,
    alice_prepare_layer,
    alice_record_outcome,
    classical_output,
    correction_bits,
)
from app.services.protocol.bob import BobSession, bob_entangle, bob_layer, bob_layer_branches
from app.services.protocol.messages import (
    FinalRegister,
    Hello,
    Instruction,
    Outcomes,
    ProtocolMessage,
    Register,
)
from app.services.protocol.models import (
    Computation,
    DependencySets,
    OutputMode,
    SecretKey,
    dependency_set,
)
from app.services.protocol.session import (
    SessionBranch,
    connect_alice,
    drive_local,
    enumerate_branches,
    run_session,
    serve_bob,
    start_bob_server,
)
from app.services.protocol.transcript import SessionTranscript, check_grammar, parse_frames

__all__ = [
    "AliceSession",
    "BobSession",
    "Computation",
    "DependencySets",
    "FinalRegister",
    "Hello",
    "Instruction",
    "OutputMode",
    "Outcomes",
    "ProtocolMessage",
    "Register",
    "SecretKey",
    "SessionBranch",
    "SessionTranscript",
    "alice_final_correction",
    "alice_instruction",
    "alice_prepare_layer",
    "alice_record_outcome",
    "bob_entangle",
    "bob_layer",
    "bob_layer_branches",
    "check_grammar",
    "classical_output",
    "connect_alice",
    "correction_bits",
    "dependency_set",
    "drive_local",
    "enumerate_branches",
    "parse_frames",
    "run_session",
    "serve_bob",
    "start_bob_server",
]

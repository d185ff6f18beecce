"""
Control messages on the wire, plain and chained
===============================================

A DIO is built, encoded in each security mode, and inspected byte by byte.
"""

import random

from rplcsm import ControlMessage, DioBody, ModeState, MsgKind, SecureMode, prepare_outgoing
from rplcsm.wire import classify_code

dio = ControlMessage(MsgKind.DIO, body=DioBody(rank=512, version=0, dodag_id=bytes(16)))

# the unsecured form: Type 155, Code 0x01, checksum, then the body
print("UM  ", prepare_outgoing(SecureMode.UM, ModeState(), dio).hex(" "))

# a keyed mode keeps Type, Code and the counter readable; the rest is ciphertext
key = bytes(range(16))
psm = ModeState(key=key, rng=random.Random(1))
print("PSM ", prepare_outgoing(SecureMode.PSM, psm, dio).hex(" "))

# CSM's first frame on a flow looks like PSM plus a trailing option.
# Every later frame also scrambles the Code byte.
csm = ModeState(key=key, rng=random.Random(1))
for i in range(4):
    frame = prepare_outgoing(SecureMode.CSM, csm, dio)
    kind = classify_code(frame[1])
    print(f"CSM #{i}: code byte 0x{frame[1]:02x} reads as {kind.family.name if kind else 'nothing'}")

#!/usr/bin/env python3
"""Streaming recognition walkthrough: a fixture encoder classifies frames,
majority-vote smoothing suppresses single-frame flicker, and audio commands
fire only on material transitions."""

from hapticvlm.fixtures import fixture_database
from hapticvlm.recognition import FixtureEncoder, FrameDescriptor, RecognitionPipeline

db = fixture_database()
encoder = FixtureEncoder(db.dimension, {f"img_{r.name}.png": r.embedding for r in db.records})

commands = []
pipeline = RecognitionPipeline(
    encoder,
    db,
    threshold=0.5,
    window=3,
    min_agreement=2,
    on_command=commands.append,
)

# A stream that dwells on wood, flickers once to metal, then settles on
# metal; one frame fails to encode and the stream simply continues.
refs = [
    "img_wood.png", "img_wood.png", "img_wood.png",
    "img_metal.png",                       # single-frame flicker: smoothed away
    "img_wood.png",
    "broken_frame.png",                    # encoder error, stream survives
    "img_metal.png", "img_metal.png", "img_metal.png",
]
frames = [FrameDescriptor(frame_id=i, timestamp_ms=i * 33, image_ref=r) for i, r in enumerate(refs)]
events = pipeline.run_frames(frames)

print("frame  raw        smoothed   audio_key  error")
for event in events:
    print(
        f"{event.frame_id:>5}  {str(event.material):<9}  "
        f"{str(event.smoothed_material):<9}  {str(event.audio_key):<9}  {event.error or ''}"
    )

print("\nplayback commands (edge-triggered, one per transition):")
for cmd in commands:
    print(f"  play {cmd.audio_key} (loop={cmd.loop})")

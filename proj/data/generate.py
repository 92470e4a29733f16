#!/usr/bin/env python3
"""Regenerate the bundled data files. Output is deterministic; rerunning rewrites identical bytes."""
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))


def write(rel, text):
    path = os.path.join(HERE, rel)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(text)


def lanes(width=3.5):
    return f"""    <lanes>
      <laneSection s="0">
        <left>
          <lane id="1" type="driving"><width sOffset="0" a="{width}" b="0" c="0" d="0"/></lane>
        </left>
        <center>
          <lane id="0" type="none"/>
        </center>
        <right>
          <lane id="-1" type="driving"><width sOffset="0" a="{width}" b="0" c="0" d="0"/></lane>
        </right>
      </laneSection>
    </lanes>
"""


def road(rid, length, geometries, objects=""):
    geo = "".join(f"      {g}\n" for g in geometries)
    return f"""  <road name="{rid}" length="{length}" id="{rid}" junction="-1">
    <planView>
{geo}    </planView>
{lanes()}{objects}  </road>
"""


def odr(name, roads):
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<OpenDRIVE>
  <header revMajor="1" revMinor="6" name="{name}"/>
{"".join(roads)}</OpenDRIVE>
"""


def maps():
    crosswalk = """    <objects>
      <object id="cw1" type="crosswalk" name="crosswalk" s="62" t="0" length="4" hdg="0"/>
    </objects>
"""
    write("maps/university_crossing.xodr", odr("university_crossing", [road("1", 180, [
        '<geometry s="0" x="0" y="0" hdg="0" length="120"><line/></geometry>',
        '<geometry s="120" x="120" y="0" hdg="0" length="60"><arc curvature="0.005"/></geometry>',
    ], crosswalk)]))
    write("fixtures/straight_100.xodr", odr("straight_100", [road("1", 100, [
        '<geometry s="0" x="0" y="0" hdg="0" length="100"><line/></geometry>'])]))
    write("fixtures/quarter_arc.xodr", odr("quarter_arc", [road("7", 25 * math.pi, [
        f'<geometry s="0" x="0" y="0" hdg="0" length="{25 * math.pi!r}"><arc curvature="0.02"/></geometry>'])]))
    write("fixtures/spiral.xodr", odr("spiral", [road("3", 50, [
        '<geometry s="0" x="0" y="0" hdg="0" length="50"><spiral curvStart="0" curvEnd="0.01"/></geometry>'])]))
    two = """    <objects>
      <object id="a" type="crosswalk" s="30" length="4"/>
      <object id="b" type="crosswalk" s="70" length="4"/>
    </objects>
"""
    write("fixtures/two_crosswalks.xodr", odr("two_crosswalks", [road("1", 100, [
        '<geometry s="0" x="0" y="0" hdg="0" length="100"><line/></geometry>'], two)]))
    write("fixtures/malformed.xodr", '<?xml version="1.0"?>\n<OpenDRIVE>\n  <road id="1" length="10">\n    <planView>\n</OpenDRIVE>\n')


# Skeleton in centimetres, Y up, Z forward, X to the character's left.
JOINTS = [
    ("Hips", None, (0, 0, 0)),
    ("Spine", "Hips", (0, 10, 0)),
    ("Chest", "Spine", (0, 20, 0)),
    ("Neck", "Chest", (0, 22, 0)),
    ("Head", "Neck", (0, 10, 0)),
    ("LeftArm", "Chest", (18, 18, 0)),
    ("LeftForeArm", "LeftArm", (0, -28, 0)),
    ("LeftHand", "LeftForeArm", (0, -25, 0)),
    ("RightArm", "Chest", (-18, 18, 0)),
    ("RightForeArm", "RightArm", (0, -28, 0)),
    ("RightHand", "RightForeArm", (0, -25, 0)),
    ("LeftUpLeg", "Hips", (9, -5, 0)),
    ("LeftLeg", "LeftUpLeg", (0, -43, 0)),
    ("LeftFoot", "LeftLeg", (0, -42, 0)),
    ("RightUpLeg", "Hips", (-9, -5, 0)),
    ("RightLeg", "RightUpLeg", (0, -43, 0)),
    ("RightFoot", "RightLeg", (0, -42, 0)),
]
END_SITES = {"Head": (0, 18, 0), "LeftHand": (0, -8, 0), "RightHand": (0, -8, 0),
             "LeftFoot": (0, -5, 14), "RightFoot": (0, -5, 14)}
HIP_HEIGHT = 95.0


def bvh_hierarchy():
    children = {}
    for name, parent, _ in JOINTS:
        children.setdefault(parent, []).append(name)
    offsets = {n: o for n, _, o in JOINTS}
    out = ["HIERARCHY"]

    def emit(name, depth, root):
        ind = "\t" * depth
        ox, oy, oz = offsets[name]
        out.append(f"{ind}{'ROOT' if root else 'JOINT'} {name}")
        out.append(f"{ind}{{")
        out.append(f"{ind}\tOFFSET {ox:.6f} {oy:.6f} {oz:.6f}")
        if root:
            out.append(f"{ind}\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation")
        else:
            out.append(f"{ind}\tCHANNELS 3 Zrotation Xrotation Yrotation")
        for c in children.get(name, []):
            emit(c, depth + 1, False)
        if name in END_SITES:
            ex, ey, ez = END_SITES[name]
            out.append(f"{ind}\tEnd Site")
            out.append(f"{ind}\t{{")
            out.append(f"{ind}\t\tOFFSET {ex:.6f} {ey:.6f} {ez:.6f}")
            out.append(f"{ind}\t}}")
        out.append(f"{ind}}}")

    emit("Hips", 0, True)
    return out


def walk_frame(t, speed_cm=130.0, cadence_hz=0.9):
    ph = 2 * math.pi * cadence_hz * t
    swing = 25.0 * math.sin(ph)
    knee_l = 30.0 * max(0.0, math.sin(ph + 1.2))
    knee_r = 30.0 * max(0.0, math.sin(ph + 1.2 + math.pi))
    arm = 18.0 * math.sin(ph)
    rot = {n: (0.0, 0.0, 0.0) for n, _, _ in JOINTS}  # (Z, X, Y) in degrees
    rot["Hips"] = (0.0, 0.0, 4.0 * math.sin(ph))
    rot["Spine"] = (0.0, 2.0, -3.0 * math.sin(ph))
    rot["Head"] = (0.0, -2.0, 0.0)
    # Positive X rotation tips a -Y bone forward (+Z) here, so legs swing with -X.
    rot["LeftUpLeg"] = (0.0, -swing, 0.0)
    rot["RightUpLeg"] = (0.0, swing, 0.0)
    rot["LeftLeg"] = (0.0, knee_l, 0.0)
    rot["RightLeg"] = (0.0, knee_r, 0.0)
    rot["LeftFoot"] = (0.0, -0.3 * knee_l, 0.0)
    rot["RightFoot"] = (0.0, -0.3 * knee_r, 0.0)
    rot["LeftArm"] = (6.0, arm, 0.0)
    rot["RightArm"] = (-6.0, -arm, 0.0)
    rot["LeftForeArm"] = (0.0, -12.0 - 4.0 * math.sin(ph), 0.0)
    rot["RightForeArm"] = (0.0, -12.0 + 4.0 * math.sin(ph), 0.0)
    bob = 2.0 * math.cos(2 * ph)
    row = [0.0, HIP_HEIGHT + bob, speed_cm * t]
    for n, _, _ in JOINTS:
        row.extend(rot[n])
    return row


def mocap():
    fps = 100
    seconds = 25
    frames = [walk_frame(k / fps) for k in range(seconds * fps + 1)]
    lines = bvh_hierarchy()
    lines += ["MOTION", f"Frames: {len(frames)}", f"Frame Time: {1 / fps:.6f}"]
    for r in frames:
        lines.append(" ".join(f"{v:.6f}" for v in r))
    write("mocap/walk_17joint_100hz.bvh", "\n".join(lines) + "\n")

    # Same motion at the tick step, for merging without resampling.
    ft = 0.055
    frames = [walk_frame(k * ft) for k in range(int(seconds / ft) + 1)]
    lines = bvh_hierarchy() + ["MOTION", f"Frames: {len(frames)}", f"Frame Time: {ft:.6f}"]
    lines += [" ".join(f"{v:.6f}" for v in r) for r in frames]
    write("mocap/walk_17joint_55ms.bvh", "\n".join(lines) + "\n")

    write("fixtures/minimal.bvh", """HIERARCHY
ROOT Hips
{
\tOFFSET 0.000000 0.000000 0.000000
\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
\tEnd Site
\t{
\t\tOFFSET 0.000000 10.000000 0.000000
\t}
}
MOTION
Frames: 2
Frame Time: 0.010000
0 0 0 0 0 0
0 0 0 0 0 0
""")


def presence():
    rng = random.Random(20240601)
    header = "participant," + ",".join(f"q{i}" for i in range(1, 16))
    rows = [header]
    for p in range(1, 19):
        latent = rng.gauss(0.0, 0.7)
        offsets = (0.3, -0.1, 0.2)
        cells = []
        for item in range(15):
            sub = item // 5
            v = 3.6 + offsets[sub] + latent + rng.gauss(0.0, 0.75)
            cells.append(str(min(5, max(1, int(round(v))))))
        rows.append(f"P{p:02d}," + ",".join(cells))
    write("presence/synthetic_18.csv", "\n".join(rows) + "\n")

    # Every item equals the participant's level: perfectly consistent items.
    rows = [header] + [f"C{p:02d}," + ",".join([str(1 + p % 5)] * 15) for p in range(10)]
    write("fixtures/presence_consistent.csv", "\n".join(rows) + "\n")
    rows = [header] + [f"D{p:02d}," + ",".join(["4"] * 15) for p in range(6)]
    write("fixtures/presence_degenerate.csv", "\n".join(rows) + "\n")
    rows = [header, "M01," + ",".join(["3"] * 15), "M02," + ",".join(["4"] * 7 + ["x"] + ["4"] * 7)]
    write("fixtures/presence_malformed.csv", "\n".join(rows) + "\n")
    rows = [header, "M01," + ",".join(["3"] * 15), "M02," + ",".join(["4"] * 14 + ["7"])]
    write("fixtures/presence_out_of_range.csv", "\n".join(rows) + "\n")


if __name__ == "__main__":
    maps()
    mocap()
    presence()

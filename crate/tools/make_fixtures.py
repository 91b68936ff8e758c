#!/usr/bin/env python3
"""Regenerates crates/core/fixtures.

Golden payloads are produced with asn1tools from docs/denm-subset.asn so the
Rust codec is checked against an independent UPER implementation.  The
103-frame replay dataset is synthetic; its per-model counts are chosen to
hit fixed target detection, field-accuracy and request statistics.

    python3 tools/make_fixtures.py
"""

import json
import random
import shutil
from pathlib import Path

import asn1tools
from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent / "crates" / "core"
FIX = ROOT / "fixtures"
ASN = ROOT / "docs" / "denm-subset.asn"

# 2025-06-01T00:00:00Z as an ITS timestamp (ms since 2004-01-01, leap seconds included)
FIXED_CLOCK_ITS = 1_748_736_000_000 - 1_072_915_200_000 + 5_000
ITS_TO_UNIX = 1_072_915_200_000 - 5_000

FLOW_RULES = ["no_passing", "no_passing_for_trucks", "pass_to_left", "pass_to_right"]
FLOW_ASN = ["noPassing", "noPassingForTrucks", "passToLeft", "passToRight"]


def dump_json(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2) + "\n")


def compact(value):
    return json.dumps(value, separators=(",", ":"))


# ---------------------------------------------------------------- golden pairs

def to_asn(denm):
    m = denm["management"]
    mgmt = {
        "actionId": {
            "originatingStationId": m["action_id"]["originating_station_id"],
            "sequenceNumber": m["action_id"]["sequence_number"],
        },
        "detectionTime": m["detection_time_its_ms"],
        "referenceTime": m["reference_time_its_ms"],
        "eventPosition": {
            "latitude": m["event_position"]["latitude"],
            "longitude": m["event_position"]["longitude"],
            "altitude": m["event_position"]["altitude_cm"],
        },
        "stationType": m["station_type"],
    }
    if "validity_duration_s" in m:
        mgmt["validityDuration"] = m["validity_duration_s"]
    out = {"management": mgmt}
    if "situation" in denm:
        s = denm["situation"]
        out["situation"] = {
            "informationQuality": s["information_quality"],
            "causeCode": s["cause_code"],
            "subCauseCode": s["sub_cause_code"],
        }
    if "alacarte" in denm:
        a = denm["alacarte"]
        bits = a["driving_lane_status"]
        value = int(bits, 2) << (8 * ((len(bits) + 7) // 8) - len(bits))
        alac = {
            "numberOfLanes": a["number_of_lanes"],
            "drivingLaneStatus": (value.to_bytes((len(bits) + 7) // 8, "big"), len(bits)),
        }
        if "distance_to_event_dm" in a:
            alac["distanceToEvent"] = a["distance_to_event_dm"]
        if "speed_limit_kmh" in a:
            alac["speedLimit"] = a["speed_limit_kmh"]
        if "traffic_flow_rule" in a:
            alac["trafficFlowRule"] = FLOW_ASN[FLOW_RULES.index(a["traffic_flow_rule"])]
        out["alacarte"] = alac
    return out


def management(station, seq, detection, reference, lat, lon, alt, validity=None, station_type=15):
    m = {
        "action_id": {"originating_station_id": station, "sequence_number": seq},
        "detection_time_its_ms": detection,
        "reference_time_its_ms": reference,
        "event_position": {"latitude": lat, "longitude": lon, "altitude_cm": alt},
    }
    if validity is not None:
        m["validity_duration_s"] = validity
    m["station_type"] = station_type
    return m


GOLDEN = [
    # every container and every optional field
    {
        "management": management(1001, 7, 675820805000, 675820805000, 482081234, 163724567, 19850, 600),
        "situation": {"information_quality": 3, "cause_code": 90, "sub_cause_code": 0},
        "alacarte": {
            "number_of_lanes": 3,
            "driving_lane_status": "110",
            "distance_to_event_dm": 842,
            "speed_limit_kmh": 80,
            "traffic_flow_rule": "pass_to_left",
        },
    },
    # management only, no validity
    {"management": management(0, 0, 0, 0, 0, 0, 0)},
    # management only, extremes of every range
    {
        "management": management(
            4294967295, 65535, 4398046511103, 4398046511103, 900000001, 1800000001, 800001, 86400, 255
        )
    },
    # alacarte without situation, no optionals
    {
        "management": management(42, 1, 600000000000, 600000000500, -337890000, 1512345678, -1500, 60),
        "alacarte": {"number_of_lanes": 1, "driving_lane_status": "0"},
    },
    # full lane width, distance only
    {
        "management": management(7777, 300, 675820800000, 675820801234, 514812345, -1234567, 4500),
        "situation": {"information_quality": 7, "cause_code": 2, "sub_cause_code": 1},
        "alacarte": {"number_of_lanes": 13, "driving_lane_status": "1011001110101", "distance_to_event_dm": 0},
    },
    # speed limit and flow rule without distance
    {
        "management": management(123456, 65000, 1, 2, -900000000, -1800000000, -100000, 0, 5),
        "situation": {"information_quality": 0, "cause_code": 3, "sub_cause_code": 255},
        "alacarte": {
            "number_of_lanes": 2,
            "driving_lane_status": "01",
            "speed_limit_kmh": 255,
            "traffic_flow_rule": "no_passing",
        },
    },
]


def make_golden():
    codec = asn1tools.compile_files(str(ASN), "uper")
    out = FIX / "golden"
    shutil.rmtree(out, ignore_errors=True)
    out.mkdir(parents=True)
    for i, denm in enumerate(GOLDEN, start=1):
        encoded = codec.encode("Denm", to_asn(denm))
        assert codec.decode("Denm", encoded) == to_asn(denm)
        dump_json(out / f"golden_denm_{i}.json", denm)
        (out / f"golden_denm_{i}.uper").write_text(encoded.hex().upper() + "\n")
    frag = codec.encode("SituationContainer", {"informationQuality": 3, "causeCode": 90, "subCauseCode": 0})
    (out / "situation_fragment.uper").write_text(frag.hex().upper() + "\n")


# --------------------------------------------------------------- replay dataset

CAUSES = {
    2: ("accident", "A collision between two cars blocks the right lane."),
    3: ("roadworks", "A mobile roadworks trailer closes the right lane."),
    10: ("obstacle", "Debris is lying on the carriageway."),
    11: ("animal", "An animal is standing on the hard shoulder next to traffic."),
    12: ("people", "A person is walking along the carriageway."),
    14: ("wrong way", "A vehicle is driving against the direction of traffic."),
    90: ("surface", "Standing water covers part of the carriageway."),
    94: ("stationary", "A broken-down truck is stopped in the right lane."),
    99: ("dangerous situation", "A vehicle has stopped abruptly with hazard lights on."),
}
GT_CAUSE_WEIGHTS = [(2, 14), (94, 12), (3, 7), (10, 6), (90, 5), (12, 3), (11, 2), (14, 2), (99, 2)]

PROFILES = {
    # false positives, lanes hits, lane-status hits, cause hits, token and latency sums
    "gemini-2.0-flash": dict(fp=4, lanes=30, status=25, cause=41, tokens=381_760, latency=422_400),
    "gemini-2.5-flash": dict(fp=10, lanes=33, status=24, cause=38, tokens=415_498, latency=2_040_140),
}

GRID_W, GRID_H = 32, 18


def pick_weighted(rng, weighted):
    total = sum(w for _, w in weighted)
    r = rng.uniform(0, total)
    for value, w in weighted:
        r -= w
        if r <= 0:
            return value
    return weighted[-1][0]


def random_status(rng, lanes, closed_at_least_one=True):
    bits = ["1"] * lanes
    closed = rng.randint(1 if closed_at_least_one else 0, max(1, lanes - 1))
    for i in rng.sample(range(lanes), closed):
        bits[i] = "0"
    return "".join(bits)


def make_ground_truth(rng):
    frames = []
    videos = 20
    per_video = [5] * videos
    for v in rng.sample(range(videos), 3):
        per_video[v] += 1
    for v in range(videos):
        for f in range(per_video[v]):
            frames.append({"image_id": f"v{v + 1:02d}_f{f + 1:02d}", "camera_id": f"cam_{v + 1:02d}"})
    assert len(frames) == 103
    positives = set(rng.sample(range(103), 53))
    for i, frame in enumerate(frames):
        frame["present"] = i in positives
        if frame["present"]:
            lanes = rng.choice([2, 2, 3, 3, 3, 4, 4, 5])
            frame["lanes"] = lanes
            frame["status"] = random_status(rng, lanes)
            frame["cause"] = pick_weighted(rng, GT_CAUSE_WEIGHTS)
    return frames


def perturb_lanes(rng, lanes):
    options = [n for n in (lanes - 1, lanes + 1, lanes + 2) if 1 <= n <= 13]
    return rng.choice(options)


def perturb_status(rng, status):
    bits = list(status)
    i = rng.randrange(len(bits))
    bits[i] = "1" if bits[i] == "0" else "0"
    return "".join(bits)


def bbox_for(rng):
    ymin = rng.randint(420, 620)
    xmin = rng.randint(150, 700)
    return [ymin, xmin, ymin + rng.randint(80, 260), xmin + rng.randint(90, 300)]


def detect_text(rng, frame, verdict, bbox, cause):
    if verdict == "NONE":
        doc = {
            "situation_type": "NONE",
            "description": rng.choice([
                "Traffic is flowing normally on all lanes.",
                "Light traffic, no obstruction visible.",
                "Vehicles travel at normal spacing; nothing unusual on the road.",
            ]),
            "bbox": None,
            "confidence_note": "",
        }
    else:
        doc = {
            "situation_type": "DENM",
            "description": CAUSES[cause][1],
            "bbox": bbox,
            "confidence_note": rng.choice(["", "object partly occluded", "low light"]),
        }
    body = json.dumps(doc, indent=2)
    style = rng.randrange(3)
    if style == 0:
        return body
    if style == 1:
        return f"```json\n{body}\n```"
    return f"Here is my assessment of the frame.\n{body}"


def extract_text(rng, lanes, status, cause):
    doc = {
        "number_of_lanes": lanes,
        "driving_lane_status": status,
        "cause_code": cause,
        "sub_cause_code": 0,
        "speed_limit_kmh": rng.choice([None, 60, 80, 100]),
        "traffic_flow_rule": rng.choice([None, None, "pass_to_left", "no_passing"]),
    }
    body = json.dumps(doc)
    return body if rng.random() < 0.6 else f"```json\n{body}\n```"


def spread(rng, count, lo, hi, target):
    """`count` integers roughly uniform in lo..hi whose sum is exactly `target`."""
    values = [rng.randint(lo, hi) for _ in range(count)]
    diff = target - sum(values)
    base, rem = divmod(abs(diff), count)
    sign = 1 if diff >= 0 else -1
    for i in range(count):
        values[i] += sign * (base + (1 if i < rem else 0))
    assert sum(values) == target and min(values) > 0
    return values


def model_predictions(rng, frames, profile):
    positives = [f for f in frames if f["present"]]
    negatives = [f for f in frames if not f["present"]]
    lanes_ok = set(f["image_id"] for f in rng.sample(positives, profile["lanes"]))
    status_ok = set(rng.sample(sorted(lanes_ok), profile["status"]))
    cause_ok = set(f["image_id"] for f in rng.sample(positives, profile["cause"]))
    preds = {}
    for f in positives:
        id_ = f["image_id"]
        lanes = f["lanes"] if id_ in lanes_ok else perturb_lanes(rng, f["lanes"])
        if id_ in status_ok:
            status = f["status"]
        elif lanes == f["lanes"]:
            status = perturb_status(rng, f["status"])
        else:
            status = random_status(rng, lanes)
        cause = f["cause"] if id_ in cause_ok else rng.choice([c for c in CAUSES if c != f["cause"]])
        preds[id_] = (lanes, status, cause)
    return preds, negatives


def make_dataset(rng, root, frames):
    shutil.rmtree(root, ignore_errors=True)
    (root / "depth").mkdir(parents=True)

    with open(root / "manifest.jsonl", "w") as f:
        for frame in frames:
            f.write(compact({
                "image_id": frame["image_id"],
                "path": f"frames/{frame['image_id']}.jpg",
                "camera_id": frame["camera_id"],
                "width": 1920,
                "height": 1080,
            }) + "\n")

    cameras = {}
    for v in range(20):
        cameras[f"cam_{v + 1:02d}"] = {
            "latitude": 482_000_000 + rng.randint(-2_000_000, 2_000_000),
            "longitude": 163_000_000 + rng.randint(-3_000_000, 3_000_000),
            "altitude_cm": rng.randint(15_000, 45_000),
            "station_id": 5000 + v + 1,
        }
    dump_json(root / "cameras.json", cameras)

    with open(root / "gt.csv", "w") as f:
        f.write("image_id,situation_present,number_of_lanes,driving_lane_status,cause_code\n")
        for frame in frames:
            if frame["present"]:
                f.write(f"{frame['image_id']},true,{frame['lanes']},{frame['status']},{frame['cause']}\n")
            else:
                f.write(f"{frame['image_id']},false,,,\n")

    # perspective road: far at the top, near at the bottom, sky invalid
    for frame in frames:
        event = rng.uniform(25.0, 140.0)
        rows = []
        for y in range(GRID_H):
            row = []
            for x in range(GRID_W):
                if y < 3:
                    row.append("nan")
                    continue
                t = (y - 2) / (GRID_H - 3)
                base = 6.0 + 220.0 * (1.0 - t) ** 2 + rng.uniform(-0.5, 0.5)
                # the lower-middle band carries the event distance
                if 7 <= y <= 12 and 3 <= x <= 20:
                    base = event + rng.uniform(-1.5, 1.5)
                row.append(f"{base:.2f}")
            rows.append(" ".join(row))
        (root / "depth" / f"{frame['image_id']}.pdepth").write_text(
            f"P-DEPTH {GRID_W} {GRID_H}\n" + "\n".join(rows) + "\n"
        )

    for name, profile in PROFILES.items():
        bundle = root / "replay" / name
        bundle.mkdir(parents=True)
        preds, negatives = model_predictions(rng, frames, profile)
        false_pos = set(f["image_id"] for f in rng.sample(negatives, profile["fp"]))
        requests = []
        for frame in frames:
            id_ = frame["image_id"]
            flagged = frame["present"] or id_ in false_pos
            if frame["present"]:
                cause = preds[id_][2]
            else:
                cause = rng.choice(list(CAUSES))
            requests.append((id_, "detect", detect_text(rng, frame, "DENM" if flagged else "NONE", bbox_for(rng), cause)))
            if flagged:
                if frame["present"]:
                    lanes, status, cause = preds[id_]
                else:
                    lanes = rng.choice([2, 3, 4])
                    status = random_status(rng, lanes, closed_at_least_one=False)
                requests.append((id_, "extract", extract_text(rng, lanes, status, cause)))

        n = len(requests)
        thinking = name == "gemini-2.5-flash"
        tokens = spread(rng, n, 2100, 2700, profile["tokens"])
        latency = spread(rng, n, 8000 if thinking else 1500, 16000 if thinking else 3800, profile["latency"])
        telemetry = []
        for (id_, stage, text), tok, lat in zip(requests, tokens, latency):
            completion = rng.randint(40, 140) if stage == "detect" else rng.randint(60, 180)
            response = {
                "text": text,
                "prompt_tokens": tok - completion,
                "completion_tokens": completion,
                "latency_ms": lat,
                "model_id": name,
            }
            dump_json(bundle / f"{id_}.{stage}.json", response)
            telemetry.append(compact({
                "image_id": id_,
                "stage": stage,
                "model_id": name,
                "total_tokens": tok,
                "latency_ms": lat,
                "timestamp_ms": FIXED_CLOCK_ITS + ITS_TO_UNIX,
            }))
        (FIX / "telemetry").mkdir(exist_ok=True)
        (FIX / "telemetry" / f"{name}.jsonl").write_text("\n".join(telemetry) + "\n")

        (root / f"run-{name}.toml").write_text(
            "# replay run; pass --out to choose the output directory\n"
            'manifest = "manifest.jsonl"\n'
            'cameras = "cameras.json"\n'
            'provider = "replay"\n'
            f'replay_bundle = "replay/{name}"\n'
            'depth_dir = "depth"\n'
            "max_in_flight = 4\n"
            f"fixed_clock = {FIXED_CLOCK_ITS}\n"
            'registry = "default"\n'
        )


# ------------------------------------------------------------------ small sample

def make_sample(root):
    shutil.rmtree(root, ignore_errors=True)
    (root / "frames").mkdir(parents=True)
    (root / "depth").mkdir()
    (root / "replay").mkdir()

    for name, crash in [("accident_01", True), ("clear_road_01", False)]:
        img = Image.new("RGB", (640, 360), (110, 150, 200))
        draw = ImageDraw.Draw(img)
        draw.polygon([(0, 360), (640, 360), (380, 120), (260, 120)], fill=(70, 70, 75))
        for x in (213, 426):
            draw.line([(x, 360), (300 + (x - 320) // 5, 120)], fill=(230, 230, 230), width=3)
        if crash:
            draw.rectangle([150, 230, 260, 300], fill=(180, 30, 30))
            draw.rectangle([230, 220, 330, 290], fill=(30, 60, 160))
        img.save(root / "frames" / f"{name}.jpg", quality=85)

        rows = []
        for y in range(36):
            row = []
            for x in range(64):
                if y < 12:
                    row.append("nan")
                    continue
                depth = 4.0 + 180.0 * (1 - (y - 12) / 23) ** 2
                if crash and 22 <= y <= 30 and 15 <= x <= 33:
                    depth = 42.5
                row.append(f"{depth:.2f}")
            rows.append(" ".join(row))
        (root / "depth" / f"{name}.pdepth").write_text("P-DEPTH 64 36\n" + "\n".join(rows) + "\n")

    with open(root / "manifest.jsonl", "w") as f:
        f.write(compact({"image_id": "accident_01", "path": "frames/accident_01.jpg", "camera_id": "a2_km_17"}) + "\n")
        f.write(compact({"image_id": "clear_road_01", "path": "frames/clear_road_01.jpg", "camera_id": "a2_km_17"}) + "\n")
    dump_json(root / "cameras.json", {
        "a2_km_17": {"latitude": 480_912_345, "longitude": 162_834_567, "altitude_cm": 21_500, "station_id": 4017}
    })
    responses = {
        ("accident_01", "detect"): json.dumps({
            "situation_type": "DENM",
            "description": "Two cars collided and block the rightmost lane.",
            "bbox": [610, 230, 840, 520],
            "confidence_note": "",
        }),
        ("accident_01", "extract"): json.dumps({
            "number_of_lanes": 3,
            "driving_lane_status": "011",
            "cause_code": 2,
            "sub_cause_code": 0,
            "speed_limit_kmh": 60,
            "traffic_flow_rule": "pass_to_left",
        }),
        ("clear_road_01", "detect"): json.dumps({
            "situation_type": "NONE",
            "description": "Empty motorway in daylight.",
            "bbox": None,
        }),
    }
    for (id_, stage), text in responses.items():
        dump_json(root / "replay" / f"{id_}.{stage}.json", {
            "text": text,
            "prompt_tokens": 1870 if stage == "detect" else 2240,
            "completion_tokens": 64 if stage == "detect" else 97,
            "latency_ms": 2310 if stage == "detect" else 2950,
            "model_id": "gemini-2.0-flash",
        })


def main():
    rng = random.Random(20250601)
    make_golden()
    frames = make_ground_truth(rng)
    make_dataset(rng, FIX / "replay103", frames)
    make_sample(FIX / "sample")


if __name__ == "__main__":
    main()

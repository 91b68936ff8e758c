#!/usr/bin/env python3
"""Writes the bundled cause-code registries.

cause_codes_etsi.json follows the ETSI CauseCodeType / SubCauseCode tables.
cause_codes.json (the default registry) is identical except that "hazardous location - surface
condition" is registered under code 90 instead of 9.
"""
import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"

TABLE = [
    (1, "traffic condition", ["increased volume of traffic", "traffic jam slowly increasing",
        "traffic jam increasing", "traffic jam strongly increasing", "traffic stationary",
        "traffic jam slightly decreasing", "traffic jam decreasing", "traffic jam strongly decreasing"]),
    (2, "accident", ["multi vehicle accident", "heavy accident", "accident involving lorry",
        "accident involving bus", "accident involving hazardous materials",
        "accident on opposite lane", "unsecured accident", "assistance requested"]),
    (3, "roadworks", ["major roadworks", "road marking work", "slow moving road maintenance",
        "short term stationary roadworks", "street cleaning", "winter service"]),
    (6, "adverse weather condition - adhesion", ["heavy frost on road", "fuel on road",
        "mud on road", "snow on road", "ice on road", "black ice on road", "oil on road",
        "loose chippings", "instant black ice", "roads salted"]),
    (7, "aquaplaning", []),
    (9, "hazardous location - surface condition", ["rockfalls", "earthquake damage",
        "sewer collapse", "subsidence", "snow drifts", "storm damage", "burst pipe",
        "volcano eruption", "falling ice"]),
    (10, "hazardous location - obstacle on the road", ["shed load", "parts of vehicles",
        "parts of tyres", "big objects", "fallen trees", "hub caps", "waiting vehicles"]),
    (11, "hazardous location - animal on the road", ["wild animals", "herd of animals",
        "small animals", "large animals"]),
    (12, "human presence on the road", ["children on roadway", "cyclist on roadway",
        "motorcyclist on roadway"]),
    (14, "wrong way driving", ["wrong lane", "wrong direction"]),
    (15, "rescue and recovery work in progress", ["emergency vehicles",
        "rescue helicopter landing", "police activity ongoing", "medical emergency ongoing",
        "child abduction in progress"]),
    (17, "adverse weather condition - extreme weather condition", ["strong winds",
        "damaging hail", "hurricane", "thunderstorm", "tornado", "blizzard"]),
    (18, "adverse weather condition - visibility", ["fog", "smoke", "heavy snowfall",
        "heavy rain", "heavy hail", "low sun glare", "sandstorms", "swarms of insects"]),
    (19, "adverse weather condition - precipitation", ["heavy rain", "heavy snowfall",
        "soft hail"]),
    (26, "slow vehicle", ["maintenance vehicle", "vehicles slowing to look at accident",
        "abnormal load", "abnormal wide load", "convoy", "snowplough", "deicing",
        "salting vehicles"]),
    (27, "dangerous end of queue", ["sudden end of queue", "queue over hill",
        "queue around bend", "queue in tunnel"]),
    (91, "vehicle breakdown", ["lack of fuel", "lack of battery power", "engine problem",
        "transmission problem", "engine cooling problem", "braking system problem",
        "steering problem", "tyre puncture", "tyre pressure problem"]),
    (92, "post crash", ["accident without ecall triggered",
        "accident with ecall manually triggered", "accident with ecall automatically triggered",
        "accident with ecall triggered without access to cellular network"]),
    (93, "human problem", ["glycemia problem", "heart problem"]),
    (94, "stationary vehicle", ["human problem", "vehicle breakdown", "post crash",
        "public transport stop", "carrying dangerous goods"]),
    (95, "emergency vehicle approaching", ["emergency vehicle approaching",
        "prioritized vehicle approaching"]),
    (96, "hazardous location - dangerous curve", ["dangerous left turn curve",
        "dangerous right turn curve", "multiple curves starting with unknown turning direction",
        "multiple curves starting with left turn", "multiple curves starting with right turn"]),
    (97, "collision risk", ["longitudinal collision risk", "crossing collision risk",
        "lateral collision risk", "vulnerable road user"]),
    (98, "signal violation", ["stop sign violation", "traffic light violation",
        "turning regulation violation"]),
    (99, "dangerous situation", ["emergency electronic brake engaged", "pre crash system engaged",
        "esp engaged", "abs engaged", "aeb engaged", "brake warning engaged",
        "collision risk warning engaged"]),
]


def entries(relocate):
    out = []
    for code, label, subs in TABLE:
        if code in relocate:
            code = relocate[code]
        sub = {"0": "unavailable"}
        for i, name in enumerate(subs, start=1):
            sub[str(i)] = name
        out.append({"code": code, "label": label, "subCauses": sub})
    out.sort(key=lambda e: e["code"])
    return out


def write(name, data):
    path = DATA / name
    path.write_text(json.dumps(data, indent=2) + "\n")
    print("wrote", path)


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    write("cause_codes_etsi.json", entries({}))
    write("cause_codes.json", entries({9: 90}))

"""Write the canonical corpus manifest to src/finq/data/corpus.json.

Quantum groups are serialized first and read back, and every action is built
on the read-back objects so that the stored coordinates match what the loader
reconstructs.
"""
import json
import pathlib

import numpy as np

from finq import linalg as la
from finq.action import (coaction_of_comultiplication, from_group_action, inner_automorphism,
                         translation_automorphisms, trivial_action)
from finq.finvn import ConcreteStarAlgebra, Weight
from finq.qgroup import (cyclic_table, function_algebra, group_algebra, kac_paljutkin,
                         qgroup_from_json, symmetric3_table, trivial)

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "finq" / "data" / "corpus.json"


def roundtrip(qg):
    return qgroup_from_json(qg.to_json())


def main():
    z2, z3, s3 = cyclic_table(2), cyclic_table(3), symmetric3_table()
    qgs = {
        "trivial": trivial("trivial"),
        "CZ2": group_algebra(z2, "CZ2"),
        "CZ3": group_algebra(z3, "CZ3"),
        "CS3": group_algebra(s3, "CS3"),
        "FZ2": function_algebra(z2, "FZ2"),
        "FZ3": function_algebra(z3, "FZ3"),
        "FS3": function_algebra(s3, "FS3"),
        "KP": kac_paljutkin("KP"),
    }
    qgs = {k: roundtrip(q) for k, q in qgs.items()}
    dual_iso = {"CZ2": "FZ2", "CZ3": "FZ3", "CS3": "FS3", "FZ2": "CZ2", "FZ3": "CZ3", "FS3": "CS3",
                "KP": "KP", "trivial": "trivial"}

    # targets share the block-form bases of the loader
    algs = {
        "C2": ConcreteStarAlgebra.from_blocks([1, 1], "C2"),
        "C3": ConcreteStarAlgebra.from_blocks([1, 1, 1], "C3"),
        "M2": ConcreteStarAlgebra.from_blocks([2], "M2"),
        "KPalg": ConcreteStarAlgebra.from_blocks([1, 1, 1, 1, 2], "KPalg"),
    }
    fz2 = qgs["FZ2"]
    fz3 = qgs["FZ3"]
    actions = [
        from_group_action(z2, translation_automorphisms(z2), algs["C2"], qg=fz2, name="transl_Z2"),
        from_group_action(z2, [np.eye(4), inner_automorphism(algs["M2"], np.diag([1, -1]))], algs["M2"],
                          qg=fz2, name="ad_Z2"),
        from_group_action(z3, translation_automorphisms(z3), algs["C3"], qg=fz3, name="transl_Z3"),
        trivial_action(qgs["CS3"], algs["M2"], name="trivial_S3_M2"),
        trivial_action(qgs["trivial"], algs["M2"], name="trivial_qg_M2"),
    ]
    kp = coaction_of_comultiplication(qgs["KP"], name="delta_KP")
    if la.residual(kp.target.basis, algs["KPalg"].basis) > 0:
        raise SystemExit("KP algebra basis does not match the block form")
    actions.append(kp)
    for a in actions[:-1]:
        if a.target.name not in algs:
            raise SystemExit(f"unexpected target {a.target.name}")

    weights = [
        Weight(algs["C2"], [1 / 3, 2 / 3], "skew_C2"),
        Weight.trace(algs["C3"], "trace_C3"),
        Weight.trace(algs["M2"], "trace_M2"),
        Weight.from_density(algs["M2"], np.diag([1.0, 2.0]), "density_M2"),
        Weight(algs["KPalg"], qgs["KP"].haar.values, "haar_KP"),
    ]

    entries = []
    for k, q in qgs.items():
        e = q.to_json()
        e["dual_iso"] = dual_iso.get(k)
        entries.append(e)
    for alg in algs.values():
        entries.append({"kind": "algebra", "name": alg.name, "blocks": list(alg.blocks.sizes)})
    for w in weights:
        entries.append(w.to_json())
    for a in actions:
        e = a.to_json()
        e["target"] = "KPalg" if a is kp else a.target.name
        entries.append(e)
    manifest = {"settings": {"tolerance": 1e-9, "report": "text", "seed": 0}, "entries": entries}
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"wrote {OUT} with {len(entries)} entries")


if __name__ == "__main__":
    main()

"""Regenerate the bundled JSON specs under src/relaynet/data."""
from pathlib import Path

from relaynet import networks
from relaynet.specfile import NetworkSpec

DATA = Path(__file__).resolve().parents[1] / "src" / "relaynet" / "data"


def spec(name, description, dist, simulation=None):
    return NetworkSpec(name, dist.alphabets, dist.channel, dist, description,
                       simulation or {})


def main():
    third, two_thirds = 1 / 3, 2 / 3
    specs = [
        spec("noiseless_p2p", "Binary noiseless link Y0 = X0; relays idle.",
             networks.noiseless_p2p(),
             {"blocks": 3, "epsilon": 0.5, "bits": {"k_R": 1}}),
        spec("symmetric_two_relay",
             "Mirror-image erasure relays: Y0 = (X0 erased w.p. 0.5, X1, X2), "
             "Y1, Y2 = X0 erased w.p. 0.1, compressions erase a further 0.6.",
             networks.symmetric_two_relay(),
             {"blocks": 2, "epsilon": 0.5, "typicality": "strong", "code": "ensemble",
              "rate_point": {"R": third, "R_s1": two_thirds, "R_s2": two_thirds,
                             "Rh1": two_thirds, "Rh2": two_thirds},
              "trend_n": [6, 12]}),
        spec("useless_receiver", "Y0 uniform and independent of every input.",
             networks.useless_receiver(),
             {"blocks": 3, "epsilon": 0.5, "bits": {"k_R": 2}}),
    ]
    DATA.mkdir(exist_ok=True)
    (DATA / "__init__.py").touch()
    for s in specs:
        (DATA / f"{s.name}.json").write_text(s.dumps(), encoding="utf-8")
        print("wrote", s.name)


if __name__ == "__main__":
    main()

"""Smoke test for the `subrank` extension module.

Build and install first, e.g. `pip install --no-build-isolation ./crates/python`.
"""

import subrank
from subrank import Certificate, Tensor


def main():
    w = Tensor.catalog("w_tensor", [], "gf:2")
    assert w.dims == (2, 2, 2)
    assert w.is_concise()
    q, cert = w.subrank()
    assert q == 1 and cert.r == 1
    assert w.slicerank() == 2

    back = Certificate.parse(cert.to_text(), w)
    assert back.verify(w)
    assert Tensor.parse(w.to_text()) == w

    null = Tensor.catalog("null_algebra", [5], "gf:7")
    assert [null.maxrank(d)[0] for d in (1, 2, 3)] == [5, 2, 5]

    remark = Tensor.from_entries("gf:2", (2, 3, 2), [(0, 2, 0, 1), (1, 0, 0, 1), (0, 1, 1, 1)])
    assert (remark.rho(1, 2), remark.rho(2, 1)) == (1, 2)
    assert remark.certify("rho", orient=(2, 1)).r == 2

    q = Tensor.from_entries("q", (1, 1, 1), [(0, 0, 0, "-3/4")])
    assert q.nonzeros() == [(0, 0, 0, "-3/4")]

    b = null.bounds()
    assert b["lower"] <= b["upper"] == 5

    table = subrank.scan((2, 2, 2), "gf:2")
    assert table["tensors"] == 256 and not table["violations"]
    assert subrank.threshold(2) == 3072

    try:
        Tensor.parse("tensor v1\nfield gf:2\ndims 1 1 1\n2 1 1 1\n")
    except subrank.ParseError:
        pass
    else:
        raise AssertionError("out-of-range index accepted")

    try:
        Tensor.catalog("null_algebra", [8], "gf:7").subrank(guard=100)
    except subrank.GuardError:
        pass
    else:
        raise AssertionError("guard not enforced")

    print("smoke test ok")


if __name__ == "__main__":
    main()

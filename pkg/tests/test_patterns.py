import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpremoval.counting import Colouring
from fpremoval.gf import CapExceeded, matmul, space
from fpremoval.patterns import (
    Complexity,
    Pattern,
    RadoCertificate,
    brute_force_certificate_exists,
    build_system,
    check_column_conditions,
    combine_patterns,
    complexity_is_one,
    is_instance,
    is_partition_regular,
    monochromatic_pattern,
    pattern_from_json,
    pattern_to_json,
    values_kernel_duality_check,
)

AP3 = [[1, 0], [1, 1], [1, 2]]
AP4 = [[1, 0], [1, 1], [1, 2], [1, 3]]
SCHUR = [[1, 0], [0, 1], [1, 1]]


class TestBuildSystem:
    def test_three_ap(self):
        s = build_system(5, AP3)
        assert s.M.tolist() == AP3
        assert s.K.tolist() == [[1, 3, 1]]
        assert s.rank_L == 1 and s.rank_M == 2

    def test_single_form(self):
        s = build_system(3, [[1]])
        assert s.K.shape == (0, 1) and s.rank_L == 0

    def test_schur_f2(self):
        s = build_system(2, SCHUR)
        assert s.K.tolist() == [[1, 1, 1]] and s.rank_L == 1

    def test_ragged(self):
        with pytest.raises(ValueError):
            build_system(3, [[1, 0], [1]])

    def test_k_annihilates_values(self):
        s = build_system(7, AP4)
        assert not matmul(s.K, s.M, 7).any()
        assert s.K.shape[0] == s.m - s.rank_M


class TestDuality:
    def test_three_ap_f3(self):
        assert values_kernel_duality_check(build_system(3, AP3), 2)

    def test_no_dependencies(self):
        assert values_kernel_duality_check(build_system(3, [[1, 0], [0, 1]]), 2)

    def test_random_systems(self):
        rng = np.random.default_rng(99)
        done = 0
        while done < 20:
            p = [2, 3, 5][done % 3]
            l, m = (int(v) for v in rng.integers(1, 5, 2))
            n = int(rng.integers(1, 4))
            while n > 1 and p ** (n * max(m, l)) > 1 << 16:
                n -= 1
            if p ** (n * max(m, l)) > 1 << 16:
                continue
            s = build_system(p, rng.integers(-3, 4, (m, l)).tolist())
            assert values_kernel_duality_check(s, n)
            done += 1


class TestRado:
    def test_schur_certificate(self):
        cert = check_column_conditions([[1, 1, -1]], 5)
        assert cert == RadoCertificate((0, 2, 1), (2, 3))
        assert cert.validate([[1, 1, -1]], 5)

    def test_three_ap(self):
        cert = check_column_conditions([[1, -2, 1]], 5)
        assert cert == RadoCertificate((0, 1, 2), (3,))

    def test_not_regular(self):
        a = np.array([[1, 1, -3]])
        assert check_column_conditions(a, 7) is None
        for k in range(1, 4):
            for sub in itertools.combinations(range(3), k):
                assert a[0, list(sub)].sum() % 7 != 0

    def test_patterns(self):
        assert is_partition_regular(monochromatic_pattern(5, AP3, 2)) is not None
        assert is_partition_regular(monochromatic_pattern(2, SCHUR, 2)) is not None
        bad = build_system(7, [[1, 0], [0, 1], [5, 5]])
        assert bad.K.tolist() == [[1, 1, 4]]
        assert is_partition_regular(bad) is None

    def test_cap(self):
        with pytest.raises(CapExceeded):
            check_column_conditions(np.ones((1, 15), dtype=int), 2)

    def test_invalid_certificates_rejected(self):
        a = [[1, 1, -1]]
        assert not RadoCertificate((0, 1, 2), (3,)).validate(a, 5)
        assert not RadoCertificate((0, 2), (2,)).validate(a, 5)

    @settings(max_examples=150, deadline=None)
    @given(
        st.sampled_from([2, 3, 5]),
        st.integers(1, 2),
        st.integers(1, 6),
        st.data(),
    )
    def test_sound_and_complete(self, p, rows, cols, data):
        entries = data.draw(st.lists(st.integers(0, p - 1), min_size=rows * cols, max_size=rows * cols))
        a = np.array(entries).reshape(rows, cols)
        cert = check_column_conditions(a, p)
        assert (cert is not None) == brute_force_certificate_exists(a, p)
        if cert is not None:
            assert cert.validate(a, p)


class TestComplexity:
    def test_three_ap(self):
        assert complexity_is_one(build_system(5, AP3)) is Complexity.YES

    def test_four_ap(self):
        assert complexity_is_one(build_system(5, AP4)) is Complexity.NO
        # x^2 - 3(x+d)^2 + 3(x+2d)^2 - (x+3d)^2 = 0
        sq = [np.array([1, 2 * j, j * j]) for j in range(4)]
        assert not ((sq[0] - 3 * sq[1] + 3 * sq[2] - sq[3]) % 5).any()

    def test_small_prime(self):
        assert complexity_is_one(build_system(2, AP3)) is Complexity.INCONCLUSIVE
        assert complexity_is_one(build_system(3, AP3)) is Complexity.INCONCLUSIVE


class TestCombine:
    def test_single(self):
        pat = monochromatic_pattern(2, SCHUR, 2)
        assert combine_patterns([pat]) is pat

    def test_two_schur(self):
        pat = monochromatic_pattern(2, SCHUR, 2)
        comb = combine_patterns([pat, pat])
        assert comb.system.K.tolist() == [[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1]]
        assert is_partition_regular(comb) is not None
        assert len(comb.colourings) == 2**6 - 6 * 6

    def test_instance_in_one_block(self):
        p, n = 3, 2
        ap = monochromatic_pattern(p, AP3, 2)
        schur = Pattern.of(p, SCHUR, 2, [(1, 2, 1)])
        comb = combine_patterns([ap, schur])
        sp = space(p, n)
        phi = Colouring.of(np.where(np.arange(sp.size) % 2 == 0, 1, 2), p, n, 2)
        x, d = np.array([1, 0]), np.array([0, 1])
        inst = np.array([x, x + d, x + 2 * d]) % p
        assert is_instance(ap, phi, inst) == ap.accepts([phi.table[sp.index(v)] for v in inst])
        # (z_1, 0): a block-1 instance padded by the zero tuple of block 2
        for a in range(p):
            for b in range(p):
                z = np.array([[a, 0], [a, b], [a, 2 * b % p]]) % p
                if is_instance(ap, phi, z):
                    full = np.vstack([z, np.zeros((3, n), dtype=int)])
                    assert is_instance(comb, phi, full)

    def test_padding_different_lengths(self):
        small = monochromatic_pattern(3, [[1]], 2)
        big = monochromatic_pattern(3, AP3, 2)
        comb = combine_patterns([small, big])
        assert comb.m == 6 and is_partition_regular(comb) is not None

    def test_joint_cap(self):
        every = itertools.product(range(1, 5), repeat=5)
        pat = Pattern.of(2, [[1, 0], [0, 1], [1, 1], [1, 1], [0, 1]], 4, every)
        with pytest.raises(CapExceeded):
            combine_patterns([pat, pat])


class TestInstances:
    def test_zero_tuple(self):
        pat = monochromatic_pattern(3, AP3, 2)
        phi = Colouring.constant(1, 3, 2, 2)
        assert is_instance(pat, phi, np.zeros((3, 2), dtype=int))

    def test_not_a_solution(self):
        pat = monochromatic_pattern(3, AP3, 2)
        phi = Colouring.constant(1, 3, 2, 2)
        assert not is_instance(pat, phi, np.array([[0, 0], [1, 0], [0, 0]]))

    def test_against_exhaustive_list(self):
        p, n = 3, 3
        pat = monochromatic_pattern(p, SCHUR, 2)
        rng = np.random.default_rng(4)
        phi = Colouring.of(rng.integers(1, 3, p**n), p, n, 2)
        sp = space(p, n)
        pts = sp.coords(np.arange(sp.size))
        exhaustive = set()
        for x in range(sp.size):
            for y in range(sp.size):
                z = (pts[x] + pts[y]) % p
                if phi.table[x] == phi.table[y] == phi.table[sp.index(z)]:
                    exhaustive.add((x, y, int(sp.index(z))))
        for _ in range(200):
            t = tuple(int(v) for v in rng.integers(0, sp.size, 3))
            if rng.integers(2):
                t = (t[0], t[1], int(sp.add(t[0], t[1])))
            assert is_instance(pat, phi, pts[list(t)]) == (t in exhaustive)


class TestJson:
    def test_round_trip(self):
        pat = Pattern.of(5, [[1, 0], [1, 1], [1, -3]], 3, [(1, 2, 3), (3, 3, 3)])
        text = pattern_to_json(pat)
        again = pattern_from_json(text)
        assert pattern_to_json(again) == text
        assert list(__import__("json").loads(text)) == ["p", "r", "forms", "colourings"]

    @pytest.mark.parametrize(
        "text",
        ['{"p": 2', "[]", '{"p": 2, "r": 2, "forms": [[1]]}', '{"p": 4, "r": 2, "forms": [[1]], "colourings": []}',
         '{"p": 2, "r": 2, "forms": [[1, 0], [1]], "colourings": []}', '{"p": 2, "r": 2, "forms": [[1]], "colourings": [[3]]}'],
    )
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            pattern_from_json(text)

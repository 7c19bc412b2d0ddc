import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covercomm.errors import InputError
from covercomm.stallings import (
    InfiniteIndexError,
    basis,
    conjugate,
    coset_action,
    enumerate_words,
    express,
    free_reduce,
    from_permutations,
    index,
    intersect,
    inverse,
    is_normal,
    membership,
    multiply,
    normal_core,
    parse_word,
    preimage,
    subgroup_graph,
    substitute,
)

S2 = subgroup_graph(2, ["aa", "b", "abA"])
T2 = subgroup_graph(2, ["a", "bb", "baB"])
STAB = from_permutations(2, {"a": (1, 0, 2), "b": (1, 2, 0)})


def random_cover(rng, rank, n):
    letters = "abc"[:rank]
    return from_permutations(rank, {x: tuple(rng.sample(range(n), n)) for x in letters})


def perm_word_action(perms, word, point):
    for x in word:
        p = perms[x.lower()]
        point = p[point] if x.islower() else p.index(point)
    return point


# words


def test_free_reduce_and_inverse():
    assert free_reduce("abBA") == ""
    assert free_reduce("aAbaBc") == "baBc"
    assert inverse("abC") == "cBA"
    assert multiply("ab", "Ba") == "aa"


def test_parse_word_rejects_foreign_letters():
    assert parse_word("aA", 1) == ""
    assert parse_word("1", 2) == ""
    with pytest.raises(InputError):
        parse_word("ac", 2)


def test_substitute():
    assert substitute("aB", ["aa", "ab"]) == "aaBA"


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="aAbB", max_size=20))
def test_reduced_words_have_no_cancelling_pairs(w):
    r = free_reduce(w)
    assert all(x.swapcase() != y for x, y in zip(r, r[1:]))
    assert free_reduce(r + inverse(r)) == ""


# construction and queries


def test_single_loop_infinite_index():
    s = subgroup_graph(2, ["a"])
    assert s.n_vertices == 1 and s.n_edges == 1
    assert index(s) == math.inf


def test_two_vertex_subgroup():
    assert S2.n_vertices == 2 and S2.is_complete()
    assert index(S2) == 2 and S2.free_rank == 3


def test_even_integers():
    s = subgroup_graph(1, ["aa"])
    assert s.n_vertices == 2 and index(s) == 2
    assert coset_action(s) == {"a": (1, 0)}


def test_membership_examples():
    s = subgroup_graph(1, ["aa"])
    assert membership(s, "")
    assert membership(s, "aaaa")
    assert not membership(s, "aaa")
    assert membership(S2, "abbA")


def test_whole_group():
    f = subgroup_graph(2, ["a", "b"])
    assert index(f) == 1
    assert basis(f) == ["a", "b"]
    assert is_normal(f)
    assert normal_core(f) == f
    assert coset_action(f) == {"a": (0,), "b": (0,)}


def test_basis_examples():
    assert basis(subgroup_graph(1, ["aa"])) == ["aa"]
    assert basis(S2) == ["b", "aa", "abA"]


def test_conjugate_examples():
    assert conjugate(S2, "") == S2
    for x in "abAB":
        assert conjugate(S2, x) == S2
    s = subgroup_graph(2, ["a"])
    c = conjugate(s, "b")
    assert c == subgroup_graph(2, ["baB"])
    assert c != s


def test_intersect_examples():
    assert intersect(subgroup_graph(1, ["aa"]), subgroup_graph(1, ["a"])) == subgroup_graph(1, ["aa"])
    assert intersect(S2, S2) == S2
    assert index(intersect(S2, T2)) == 4


def test_normality_examples():
    assert is_normal(S2)
    assert index(STAB) == 3
    assert not is_normal(STAB)


def test_stabilizer_core():
    core = normal_core(STAB)
    assert index(core) == 6
    assert is_normal(core)
    assert normal_core(S2) == S2


def test_stabilizer_rank_is_four():
    # Nielsen-Schreier: 1 + 3 * (2 - 1)
    assert STAB.free_rank == 4
    assert len(basis(STAB)) == 4


def test_stabilizer_coset_action_up_to_relabeling():
    act = coset_action(STAB)
    assert sorted(len(c) for c in _cycles(act["a"])) == [1, 2]
    assert sorted(len(c) for c in _cycles(act["b"])) == [3]


def _cycles(p):
    seen, out = set(), []
    for i in range(len(p)):
        if i not in seen:
            c = [i]
            seen.add(i)
            j = p[i]
            while j != i:
                c.append(j)
                seen.add(j)
                j = p[j]
            out.append(c)
    return out


def test_infinite_index_queries_raise():
    with pytest.raises(InfiniteIndexError):
        normal_core(subgroup_graph(2, ["a"]))
    with pytest.raises(InfiniteIndexError):
        coset_action(subgroup_graph(2, ["a"]))


def test_express_rewrites_members():
    s = subgroup_graph(2, ["aa", "b", "abA"])
    for w in ["aa", "b", "abA", "abbA", "aabaa", "BaabAA"]:
        e = express(s, w)
        assert e is not None
        assert substitute(e, ["aa", "b", "abA"]) == free_reduce(w)
    assert express(s, "a") is None


def test_kernel_witness_for_repeated_generator():
    s = subgroup_graph(2, ["a", "a"])
    assert s.kernel_witnesses == ("bA",)
    assert substitute("bA", ["a", "a"]) == ""


def test_preimage_under_doubling():
    # F1 -> F1, a -> aa; preimage of <aa> is everything, of <aaaa> is <aa>
    assert index(preimage(subgroup_graph(1, ["aa"]), ["aa"], 1)) == 1
    assert preimage(subgroup_graph(1, ["aaaa"]), ["aa"], 1) == subgroup_graph(1, ["aa"])


def test_enumerate_words_counts():
    # reduced words of length k in F2: 4 * 3^(k-1)
    words = list(enumerate_words(2, 3))
    assert len(words) == 1 + 4 + 12 + 36
    assert len(set(words)) == len(words)


# properties


def test_nielsen_schreier_random_covers():
    rng = random.Random(11)
    for _ in range(100):
        rank = rng.choice([2, 3])
        s = random_cover(rng, rank, rng.randint(1, 8))
        assert s.is_complete()
        assert s.free_rank - 1 == index(s) * (rank - 1)


def test_stabilizer_membership_matches_action():
    rng = random.Random(3)
    for _ in range(20):
        n = rng.randint(1, 5)
        perms = {x: tuple(rng.sample(range(n), n)) for x in "ab"}
        s = from_permutations(2, perms)
        for w in enumerate_words(2, 4):
            assert membership(s, w) == (perm_word_action(perms, w, 0) == 0)


def test_intersection_matches_membership_oracle():
    rng = random.Random(5)
    words = list(enumerate_words(2, 6))
    for _ in range(6):
        s = random_cover(rng, 2, rng.randint(1, 4))
        t = random_cover(rng, 2, rng.randint(1, 4))
        r = intersect(s, t)
        assert intersect(t, s) == r
        assert intersect(r, r) == r
        for w in words:
            assert membership(r, w) == (membership(s, w) and membership(t, w))


def test_core_contained_and_normal():
    rng = random.Random(8)
    for _ in range(15):
        s = random_cover(rng, 2, rng.randint(1, 5))
        core = normal_core(s)
        assert is_normal(core)
        assert math.factorial(index(s)) % index(core) == 0
        for w in enumerate_words(2, 4):
            if membership(core, w):
                for g in ["", "a", "B", "ab"]:
                    assert membership(s, multiply(g, w, inverse(g)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.text(alphabet="aAbB", min_size=1, max_size=5), min_size=1, max_size=3), st.text(alphabet="aAbB", max_size=4))
def test_conjugation_round_trip(gens, w):
    s = subgroup_graph(2, gens)
    assert conjugate(conjugate(s, w), inverse(w)) == s


@settings(max_examples=40, deadline=None)
@given(st.lists(st.text(alphabet="aAbB", min_size=1, max_size=4), min_size=1, max_size=3))
def test_generators_are_members_and_graph_is_folded(gens):
    s = subgroup_graph(2, gens)
    for g in gens:
        assert membership(s, g)
    for v, t in enumerate(s.transitions):
        for x, u in t.items():
            assert s.transitions[u][x.swapcase()] == v
        if v:
            assert len(t) >= 2


def _brute_kernel(images, m, max_len):
    for w in enumerate_words(m, max_len):
        if w and substitute(w, images) == "":
            return w
    return None


INJECTIVITY_CASES = [
    (["a", "b"], 2),
    (["aa", "b"], 2),
    (["ab", "ba"], 2),
    (["a", "a"], 2),
    (["ab", "abab"], 2),
    (["a", "b", "ab"], 3),
    (["aa", "aaa"], 2),
    (["abA", "b"], 2),
]


@pytest.mark.parametrize("images,m", INJECTIVITY_CASES)
def test_injectivity_by_rank_matches_kernel_search(images, m):
    s = subgroup_graph(2, images)
    injective = s.free_rank == m
    witness = _brute_kernel(images, m, 6)
    assert injective == (witness is None)
    assert bool(s.kernel_witnesses) == (not injective)
    for k in s.kernel_witnesses:
        assert substitute(k, images) == ""

import random

import pytest

from wot.base_ot import (BatchSenderView, OtQuery, batch_binding, ot_batch_run,
                         ot_query, ot_recover, ot_respond, pick_binding,
                         query_element)
from wot.errors import GroupError, ProtocolError
from wot.group import GroupParams
from wot.instrument import Counters


def run_single(params, secrets, index, rng, binding=b"t"):
    query, r = ot_query(params, len(secrets), index, rng)
    response = ot_respond(params, secrets, query, binding, rng)
    return ot_recover(params, response, index, r, binding), response, query, r


class TestQuery:
    def test_frozen_vector(self):
        # On (p=23, q=11, g=2) with a hand-picked h = g^3 = 8:
        # index 2, exponent 4 -> y = 2^4 * 8^2 mod 23 = 12.
        params = GroupParams(p=23, q=11, g=2, h=8, param_id="toy-frozen")
        assert query_element(params, index=2, r=4) == 12

    def test_index_zero_is_pure_generator_power(self, p23, rng):
        query, r = ot_query(p23, 6, 0, rng)
        assert query.y == pow(p23.g, r, p23.p)

    def test_out_of_range(self, p23, rng):
        with pytest.raises(ProtocolError):
            ot_query(p23, 6, 6, rng)
        with pytest.raises(ProtocolError):
            ot_query(p23, 6, -1, rng)

    def test_query_histograms_indistinguishable(self, p23):
        """Fixed vs varying index: the query element looks the same."""
        rng = random.Random(2024)
        trials = 100_000
        hist_fixed: dict[int, int] = {}
        hist_varying: dict[int, int] = {}
        for i in range(trials):
            q1, _ = ot_query(p23, 6, 3, rng)
            q2, _ = ot_query(p23, 6, i % 6, rng)
            hist_fixed[q1.y] = hist_fixed.get(q1.y, 0) + 1
            hist_varying[q2.y] = hist_varying.get(q2.y, 0) + 1
        support = sorted(hist_fixed) + sorted(set(hist_varying) - set(hist_fixed))
        tv = 0.5 * sum(abs(hist_fixed.get(y, 0) - hist_varying.get(y, 0)) / trials
                       for y in support)
        assert tv < 0.02


class TestRespondRecover:
    def test_single_secret_always_recovered(self, p23, rng):
        secrets = [b"\x42" * 16]
        got, *_ = run_single(p23, secrets, 0, rng)
        assert got == secrets[0]

    def test_full_protocol_recovers_chosen(self, p23, rng):
        secrets = [bytes([i]) * 16 for i in range(6)]
        got, response, _, _ = run_single(p23, secrets, 2, rng)
        assert got == secrets[2]
        assert response.n_secrets == 6

    def test_zero_query_rejected(self, p23, rng):
        with pytest.raises(GroupError, match="not a subgroup member"):
            ot_respond(p23, [b"\x00" * 16], OtQuery(y=0), b"t", rng)

    def test_nonmember_query_rejected(self, p23, rng):
        assert pow(5, 11, 23) != 1
        with pytest.raises(GroupError):
            ot_respond(p23, [b"\x00" * 16], OtQuery(y=5), b"t", rng)

    def test_zero_secret_round_trips(self, p23, rng):
        secrets = [b"\x00" * 16, b"\xff" * 16]
        got, *_ = run_single(p23, secrets, 0, rng)
        assert got == b"\x00" * 16

    def test_empty_secret_list_rejected(self, p23, rng):
        query, _ = ot_query(p23, 1, 0, rng)
        with pytest.raises(ProtocolError):
            ot_respond(p23, [], query, b"t", rng)

    def test_exhaustive_recovery_small_spaces(self, p23, rng):
        for n in range(1, 9):
            secrets = [rng.randbytes(16) for _ in range(n)]
            for index in range(n):
                got, *_ = run_single(p23, secrets, index, rng)
                assert got == secrets[index]

    def test_recovery_on_p47(self, p47, rng):
        secrets = [rng.randbytes(16) for _ in range(5)]
        got, *_ = run_single(p47, secrets, 4, rng)
        assert got == secrets[4]

    def test_wrong_index_recovery_yields_garbage(self, p23):
        """Honest-exponent recovery at a wrong index never lands on a secret."""
        rng = random.Random(555)
        trials = 10_000
        secrets = [bytes([i]) * 16 for i in range(6)]
        for _ in range(trials):
            index = rng.randrange(6)
            query, r = ot_query(p23, 6, index, rng)
            response = ot_respond(p23, secrets, query, b"t", rng)
            wrong = (index + 1 + rng.randrange(5)) % 6
            got = ot_recover(p23, response, wrong, r, b"t")
            assert got != secrets[wrong]

    def test_fresh_exponents_counted(self, p23, rng):
        counters = Counters()
        secrets = [rng.randbytes(16) for _ in range(6)]
        query, r = ot_query(p23, 6, 1, rng, counters)
        ot_respond(p23, secrets, query, b"t", rng, counters)
        assert counters.query_exponents == 1
        assert counters.response_exponents == 6


class TestBatch:
    def test_all_picks_learn_everything(self, p23, rng):
        secrets = [rng.randbytes(16) for _ in range(6)]
        got, view = ot_batch_run(p23, secrets, list(range(6)), rng)
        assert got == secrets
        assert view.num_picks == 6

    def test_empty_batch(self, p23, rng):
        got, view = ot_batch_run(p23, [b"\x01" * 16], [], rng)
        assert got == []
        assert view.num_picks == 0

    def test_duplicate_picks_allowed_here(self, p23, rng):
        secrets = [rng.randbytes(16) for _ in range(4)]
        got, _ = ot_batch_run(p23, secrets, [2, 2, 2], rng)
        assert got == [secrets[2]] * 3

    def test_sender_view_is_queries_and_count_only(self, p23, rng):
        secrets = [rng.randbytes(16) for _ in range(6)]
        _, view = ot_batch_run(p23, secrets, [2, 3, 4], rng)
        assert isinstance(view, BatchSenderView)
        assert set(vars(view)) == {"queries"}
        assert view.num_picks == 3

    def test_equal_size_batches_indistinguishable(self, p23):
        """Same T, different picks: pooled query histograms match."""
        rng = random.Random(99)
        secrets = [rng.randbytes(16) for _ in range(6)]
        trials = 20_000
        hists = {"a": {}, "b": {}}
        for _ in range(trials):
            _, view_a = ot_batch_run(p23, secrets, [2, 3, 4], rng)
            _, view_b = ot_batch_run(p23, secrets, [0, 1, 5], rng)
            for y in view_a.queries:
                hists["a"][y] = hists["a"].get(y, 0) + 1
            for y in view_b.queries:
                hists["b"][y] = hists["b"].get(y, 0) + 1
        from scipy.stats import chi2_contingency
        support = sorted(set(hists["a"]) | set(hists["b"]))
        table = [[hists["a"].get(y, 0) for y in support],
                 [hists["b"].get(y, 0) for y in support]]
        assert chi2_contingency(table).pvalue > 0.01

    def test_pick_bindings_differ_per_ordinal(self, p23, rng):
        queries = [ot_query(p23, 6, i, rng)[0] for i in (1, 2)]
        sid = batch_binding(p23, queries)
        assert pick_binding(sid, 0) != pick_binding(sid, 1)
        assert batch_binding(p23, queries) == sid  # deterministic in the batch

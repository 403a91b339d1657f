import itertools

import pytest

from disfluency.decode import is_legal
from disfluency.schemes import (EIGHT, EXTENDED, FIVE, FIVE_LEGALITY, SchemeError, check_labels,
                                format_legality, get_scheme, parse_legality, parse_scheme)

from oracles import FIVE_NEXT, FIVE_START, FIVE_END, legal_five


class TestBuiltins:
    def test_sizes(self):
        assert FIVE.size == 5
        assert EIGHT.size == 8
        assert EXTENDED.size == 15

    def test_registry(self):
        assert get_scheme("eight") is EIGHT
        with pytest.raises(SchemeError, match="unknown"):
            get_scheme("nine")

    def test_five_legality_matches_table(self):
        assert FIVE_LEGALITY.start == FIVE_START
        assert FIVE_LEGALITY.end == FIVE_END
        for a in FIVE.states:
            assert set(FIVE_LEGALITY.successors(a)) == FIVE_NEXT[a]

    def test_eight_maps_repairs_to_five(self):
        assert EIGHT.to_five["C"] == "O"
        assert EIGHT.to_five["C_IE"] == "IE"
        assert EIGHT.to_five["C_IP"] == "IP"

    @pytest.mark.parametrize("scheme", [EIGHT, EXTENDED])
    def test_lifted_automaton_agrees_with_five(self, scheme):
        # a sequence is legal iff its five-state image is legal
        for T in (1, 2, 3):
            for seq in itertools.product(scheme.states, repeat=T):
                image = [scheme.to_five[s] for s in seq]
                assert is_legal(seq, scheme.legality) == legal_five(image)


class TestText:
    def test_round_trip(self):
        text = format_legality(FIVE_LEGALITY, FIVE.states)
        assert parse_legality(text) == FIVE_LEGALITY

    def test_unknown_directive(self):
        with pytest.raises(SchemeError, match="unknown directive"):
            parse_legality("begin: O\n")

    def test_custom_scheme_lifts_automaton(self):
        s = parse_scheme("name: six\nstates: O BE IE IP BE_IP R\nfive: R -> O\nrepair: R\n")
        assert s.name == "six"
        assert s.legality.allows("IP", "R")
        assert not s.legality.allows("BE", "R")
        assert "R" not in s.edit_states

    def test_unreachable_state_rejected(self):
        with pytest.raises(SchemeError, match="not reachable"):
            parse_scheme("states: O X\nstart: O\nend: O X\ntrans: O -> O\n")

    def test_check_labels(self):
        check_labels(["O", "C"], EIGHT)
        with pytest.raises(SchemeError, match="position 1"):
            check_labels(["O", "C"], FIVE)

"""Shared fixtures: small PENMAN graphs with known linearizations."""

import pytest

# A 5-node graph with one re-entrant node (the person fills two roles).
DESCRIBE_PENMAN = """\
(d / describe-01
   :ARG0 (p / person
            :name (n / name
                     :op1 "Ryan"))
   :ARG1 p
   :ARG2 (g / genius))
"""
DESCRIBE_LIN = "describe :arg0 ( person :name ( name :op1 ryan ) ) :arg1 person :arg2 genius"

# Deeper graph exercising constants ("-", quoted strings), hyphenated
# concepts with sense suffixes, and inverse relation labels.
LOOKOVER_PENMAN = """\
(p / possible-01 :polarity -
   :ARG1 (l / look-over-06
            :ARG0 (w / we)
            :ARG1 (a / account-01
                     :ARG1 (w2 / war-01
                              :ARG1 (c2 / country :wiki "Japan"
                                        :name (n2 / name :op1 "Japan"))
                              :time (p2 / previous)
                              :ARG1-of (c / call-01
                                          :mod (s / so)))
                     :mod (o / old))))
"""
LOOKOVER_LIN = (
    "possible :polarity - :arg1 ( look-over :arg0 we :arg1 ( account :arg1 "
    "( war :arg1 ( country :wiki japan :name ( name :op1 japan ) ) :time previous "
    ":arg1-of ( call :mod so ) ) :mod old ) )"
)

# Re-entrancy where the revisited node (the center) has children of its own.
PROVIDE_PENMAN = """\
(p / provide-01
   :ARG0 (a / agree-01)
   :ARG1 (a2 / and
             :op1 (s / staff
                     :prep-for (c / center
                                  :mod (r / research-01)))
             :op2 (f / fund-01
                     :prep-for c)))
"""
PROVIDE_LIN = (
    "provide :arg0 agree :arg1 ( and :op1 ( staff :prep-for ( center :mod research ) ) "
    ":op2 ( fund :prep-for center ) )"
)

SINGLE_NODE_PENMAN = "(g / genius)"
PATH3_PENMAN = "(a / alpha :mod (b / beta :mod (c / gamma)))"


@pytest.fixture
def describe_graph():
    from amr2text.amr import parse_penman

    return parse_penman(DESCRIBE_PENMAN)

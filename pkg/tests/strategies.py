"""Hypothesis strategies shared by the tests."""

from hypothesis import strategies as st

from bhzkit.trees import Tree

EDGES = [(0, 0), (0, 1), (0, 2)]


def _node(children):
    return st.builds(
        lambda noise, poly, kids: Tree(noise, poly, kids),
        st.sampled_from([None, "Xi"]),
        st.sampled_from([(0, 0), (0, 1), (1, 0)]),
        st.lists(st.tuples(st.sampled_from(EDGES), children), max_size=3),
    )


trees = st.recursive(
    st.builds(Tree, st.sampled_from([None, "Xi"]), st.sampled_from([(0, 0), (0, 1)])),
    _node,
    max_leaves=6,
)

import pytest

from bhzkit.rules import (
    Catalog,
    EXPECTED_GROUPS,
    catalog_report,
    compare_with_expected,
    conforms_to_rule,
    derivative_catalog,
    enumerate_negative,
    enumerate_noises_inductive,
    inductive_domain,
    node_profile,
    region_counts,
)
from bhzkit.trees import Tree, homogeneity, noise_count, parse_tree

T = parse_tree


class TestRule:
    def test_listed_tree(self):
        assert conforms_to_rule(T("Xi*I[Xi]"))

    def test_noise_with_dotted_child(self):
        assert not conforms_to_rule(T("Xi*I'[Xi]"))

    def test_three_dotted_children(self):
        assert not conforms_to_rule(T("I'[Xi]*I'[Xi]*I'[Xi]"))

    def test_two_noises_at_one_node_impossible(self):
        with pytest.raises(ValueError):
            T("Xi*Xi")

    def test_profile_normality(self):
        prof = node_profile(T("I[Xi]*I'[Xi]*I'[Xi]"))
        assert prof.admissible()
        assert node_profile(T("I[Xi]*I'[Xi]")).admissible()

    def test_every_catalog_tree_conforms(self, catalog):
        for t in catalog:
            assert conforms_to_rule(t)
            assert homogeneity(t).is_negative()


class TestCatalog:
    def test_group_sizes(self, catalog):
        counts = region_counts(catalog)
        assert counts["-1-2k"] == 2
        assert counts["-1/2"] == 8
        assert counts["-2k"] == 9
        assert counts["-4k"] == len(EXPECTED_GROUPS["-4k"]) == 23

    def test_matches_transcription(self, catalog):
        cmp = compare_with_expected(catalog)
        assert cmp["ok"], cmp

    def test_no_duplicates(self, catalog):
        assert len(catalog.trees()) == len(catalog.tree_set())

    def test_max_noise(self, catalog):
        assert catalog_report(catalog)["max_noise_count"] == 4

    def test_default_caps_complete(self, catalog):
        assert not catalog.truncated

    def test_small_cap_truncates(self):
        c = enumerate_negative(max_noises=2)
        assert c.truncated
        assert all(noise_count(t) <= 2 for t in c)
        assert compare_with_expected(c)["ok"]

    def test_empty_report(self):
        rep = catalog_report(Catalog.from_trees([]))
        assert rep["total"] == 0 and rep["groups"] == [] and rep["max_noise_count"] == 0


class TestInductive:
    def test_first_operator(self):
        assert T("I'[Xi]") in enumerate_noises_inductive().tree_set()

    def test_second_operator(self):
        assert T("Xi*I[Xi]") in enumerate_noises_inductive().tree_set()

    def test_agrees_with_rule_enumeration(self, catalog):
        ind = enumerate_noises_inductive().tree_set()
        rule = {t for t in catalog if inductive_domain(t)}
        assert ind == rule


class TestDerivativeCatalog:
    def test_each_marked_once(self, catalog):
        d2 = derivative_catalog(catalog, 2)
        assert len(d2) > 0
        for t in d2:
            tags = t.noise_tags()
            assert tags.count("Xi1") == 1 and tags.count("Xi2") == 1

    def test_plus_homogeneity_negative(self, catalog):
        for t in derivative_catalog(catalog, 1):
            assert homogeneity(t, plus_mode=True).is_negative()

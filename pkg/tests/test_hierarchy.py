import itertools

import pytest

from keanon import (
    DomainError,
    Hierarchy,
    SchemaMismatchError,
    builtin_hierarchies,
    generalise,
    lattice_enumerate,
    load_hierarchy_csv,
)
from keanon.hierarchy import (
    gender_hierarchy,
    marital_status_hierarchy,
    race_hierarchy,
    year_of_birth_hierarchy,
    zip_code_hierarchy,
)


def year_bucket_oracle(year: int, width: int) -> str:
    """Brute force: scan anchored buckets until one contains the year."""
    lo = 0 if year >= 0 else -((-year // width + 1) * width)
    while not (lo <= year <= lo + width - 1):
        lo += width
    return f"[{lo}-{lo + width - 1}]"


class TestZip:
    def setup_method(self):
        self.zip = zip_code_hierarchy()

    def test_masks_trailing_digits(self):
        assert self.zip.generalise("23712", 2) == "237**"

    def test_identity_level(self):
        assert self.zip.generalise("23712", 0) == "23712"

    def test_top_level_fully_masked(self):
        assert self.zip.generalise("23712", 5) == "*****"

    @pytest.mark.parametrize("level,expected", [
        (1, "2371*"), (2, "237**"), (3, "23***"), (4, "2****"), (5, "*****"),
    ])
    def test_all_levels(self, level, expected):
        assert self.zip.generalise("23712", level) == expected

    def test_non_five_char_is_domain_error(self):
        with pytest.raises(DomainError):
            self.zip.generalise("123", 1)

    def test_level_out_of_range(self):
        with pytest.raises(DomainError):
            self.zip.generalise("23712", 6)


class TestYearOfBirth:
    def setup_method(self):
        self.yob = year_of_birth_hierarchy()

    def test_1983_level1(self):
        assert self.yob.generalise(1983, 1) == year_bucket_oracle(1983, 2)
        assert self.yob.generalise(1983, 1) == "[1982-1983]"

    @pytest.mark.parametrize("year", [1899, 1900, 1901, 1955, 1983, 1984, 2000, 2024])
    @pytest.mark.parametrize("level,width", [(1, 2), (2, 4), (3, 8)])
    def test_matches_bucketing_oracle(self, year, level, width):
        assert self.yob.generalise(year, level) == year_bucket_oracle(year, width)

    def test_top_level(self):
        assert self.yob.generalise(1983, 4) == "*"

    def test_accepts_float_cells(self):
        assert self.yob.generalise(1983.0, 1) == "[1982-1983]"

    def test_identity(self):
        assert self.yob.generalise(1983.0, 0) == "1983"

    def test_non_year_is_domain_error(self):
        with pytest.raises(DomainError):
            self.yob.generalise("eighty", 1)


class TestGenderRaceMarital:
    def test_gender_person(self):
        assert gender_hierarchy().generalise("Male", 1) == "Person"

    def test_race_star(self):
        assert race_hierarchy().generalise("White", 1) == "*"

    def test_married_maps_to_in_marriage(self):
        assert marital_status_hierarchy().generalise("Married", 1) == "In marriage"

    @pytest.mark.parametrize("value,expected", [
        ("Married-civ-spouse", "In marriage"),
        ("Married-AF-spouse", "In marriage"),
        ("Married-spouse-absent", "In marriage"),
        ("Never-married", "Alone"),
        ("Divorced", "Alone"),
        ("Separated", "Alone"),
        ("Widowed", "Alone"),
    ])
    def test_adult_tokens(self, value, expected):
        assert marital_status_hierarchy().generalise(value, 1) == expected

    def test_marital_top(self):
        assert marital_status_hierarchy().generalise("Divorced", 2) == "*"


class TestMonotoneCoarsening:
    """Values mapped together at level l stay together at every coarser level."""

    DOMAINS = {
        "year_of_birth": [str(y) for y in range(1900, 1999)],
        "gender": ["Male", "Female"],
        "race": ["White", "Black", "Other"],
        "marital_status": ["Married", "Married-civ-spouse", "Never-married",
                           "Divorced", "Widowed"],
        "zip_code": [f"{z:05d}" for z in range(23700, 23730)],
    }

    @pytest.mark.parametrize("name", sorted(DOMAINS))
    def test_builtin(self, name):
        hier = builtin_hierarchies()[name]
        domain = self.DOMAINS[name]
        for l in range(hier.h - 1):
            for v1, v2 in itertools.combinations(domain, 2):
                if hier.generalise(v1, l) == hier.generalise(v2, l):
                    assert hier.generalise(v1, l + 1) == hier.generalise(v2, l + 1)


class TestFromTable:
    ROWS = [("a", "x", "*"), ("b", "x", "*"), ("c", "y", "*")]

    def test_valid_table(self):
        hier = Hierarchy.from_table("attr", self.ROWS)
        assert hier.h == 3
        assert hier.generalise("a", 1) == "x"
        assert generalise("c", hier, 1) == "y"

    def test_unknown_value_is_domain_error(self):
        hier = Hierarchy.from_table("attr", self.ROWS)
        with pytest.raises(DomainError):
            hier.generalise("z", 0)

    def test_non_monotone_rejected(self):
        rows = [("a", "x", "p"), ("b", "x", "q")]
        with pytest.raises(SchemaMismatchError):
            Hierarchy.from_table("attr", rows)

    def test_non_constant_top_rejected(self):
        rows = [("a", "x"), ("b", "y")]
        with pytest.raises(SchemaMismatchError):
            Hierarchy.from_table("attr", rows)

    def test_duplicate_raw_rejected(self):
        rows = [("a", "*"), ("a", "*")]
        with pytest.raises(SchemaMismatchError):
            Hierarchy.from_table("attr", rows)


class TestHierarchyFile:
    def test_load(self, tmp_path):
        path = tmp_path / "color.csv"
        path.write_text("color\nred,warm,*\norange,warm,*\nblue,cool,*\n",
                        encoding="utf-8")
        hier = load_hierarchy_csv(path)
        assert hier.attribute == "color"
        assert hier.h == 3
        assert hier.generalise("blue", 1) == "cool"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(SchemaMismatchError):
            load_hierarchy_csv(path)


class TestLattice:
    def test_product_count_2x3(self):
        groups = lattice_enumerate([Hierarchy("a", 2, lambda v, l: v),
                                    Hierarchy("b", 3, lambda v, l: v)])
        nodes = [n for g in groups for n in g]
        assert len(nodes) == 6
        assert len(set(nodes)) == 6

    def test_single_attribute_heights(self):
        groups = lattice_enumerate([Hierarchy("a", 6, lambda v, l: v)])
        assert len(groups) == 6
        assert all(len(g) == 1 for g in groups)

    def test_builtin_quartet_is_60_nodes(self):
        hiers = builtin_hierarchies()
        quartet = [hiers["year_of_birth"], hiers["gender"], hiers["race"],
                   hiers["marital_status"]]
        groups = lattice_enumerate(quartet)
        nodes = [n for g in groups for n in g]
        # enumeration oracle: independent product walk
        oracle = set(itertools.product(range(5), range(2), range(2), range(3)))
        assert len(nodes) == 60
        assert set(nodes) == oracle

    def test_height_grouping(self):
        groups = lattice_enumerate([Hierarchy("a", 3, lambda v, l: v),
                                    Hierarchy("b", 3, lambda v, l: v)])
        for height, group in enumerate(groups):
            assert all(sum(node) == height for node in group)

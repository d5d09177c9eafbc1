"""Table schema parsing and canonical cell rendering."""

import numpy as np
import pytest

from chartreward.tables import (
    EXTRA_KEY,
    MISSING_KEY,
    RAGGED,
    SYNTAX,
    CanonicalTable,
    ParseFailure,
    canonical_cell,
    parse_number,
    parse_table_json,
    render_number,
)


class TestParseTableJson:
    def test_minimal_conformant(self):
        table = parse_table_json('{"columns":["A","B"],"rows":[[1,2],[3,4]]}')
        assert isinstance(table, CanonicalTable)
        assert table.columns == ("A", "B")
        assert table.rows == (("1", "2"), ("3", "4"))

    def test_ragged_row(self):
        assert parse_table_json('{"columns":["A"],"rows":[[1,2]]}') == ParseFailure(RAGGED)

    def test_missing_key(self):
        assert parse_table_json('{"cols":["A"],"rows":[[1]]}') == ParseFailure(MISSING_KEY)

    @pytest.mark.parametrize(
        "text,reason",
        [
            # Key-mutation suite: renamed, dropped, cased, and extra keys.
            ('{"column":["A"],"rows":[[1]]}', MISSING_KEY),
            ('{"Columns":["A"],"rows":[[1]]}', MISSING_KEY),
            ('{"columns":["A"]}', MISSING_KEY),
            ('{"rows":[[1]]}', MISSING_KEY),
            ("{}", MISSING_KEY),
            ('{"columns":["A"],"rows":[[1]],"title":"x"}', EXTRA_KEY),
            ('{"columns":["A"],"rows":[[1]],"rows2":[]}', EXTRA_KEY),
            ('{"cols":["A"],"rows":[[1]],"extra":1}', MISSING_KEY),
        ],
    )
    def test_key_mutations(self, text, reason):
        assert parse_table_json(text) == ParseFailure(reason)

    @pytest.mark.parametrize(
        "text",
        [
            "not json at all",
            '{"columns":["A"],"rows":[[1]]',  # truncated
            "[1,2,3]",  # valid JSON but not an object
            '"columns"',
            '{"columns":["A"],"rows":[[NaN]]}',  # non-standard constant
        ],
    )
    def test_syntax_failures(self, text):
        assert parse_table_json(text) == ParseFailure(SYNTAX)

    @pytest.mark.parametrize(
        "text",
        [
            '{"columns":"A","rows":[[1]]}',  # columns not a list
            '{"columns":["A"],"rows":{"r":1}}',  # rows not a list
            '{"columns":["A"],"rows":[1]}',  # row not a list
            '{"columns":["A"],"rows":[[[1]]]}',  # nested structure in a cell
            '{"columns":[["A"]],"rows":[[1]]}',  # nested structure in a header
        ],
    )
    def test_shape_violations_are_ragged(self, text):
        assert parse_table_json(text) == ParseFailure(RAGGED)

    def test_empty_table_is_valid(self):
        table = parse_table_json('{"columns":[],"rows":[]}')
        assert isinstance(table, CanonicalTable)
        assert table.n_columns == 0 and table.n_rows == 0


class TestCanonicalization:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (1, "1"),
            (1.0, "1"),
            ("1", "1"),
            ("1.0", "1"),
            (3.14, "3.14"),
            ("003.140", "3.14"),
            (-2.5, "-2.5"),
            (True, "true"),
            (False, "false"),
            (None, "null"),
            ("Japan", "Japan"),
            ("  spaced  ", "spaced"),
            (0.1234567, "0.123457"),  # six fractional digits
            (1.5e-5, "0.000015"),
            (-1e-7, "0"),  # rounds away entirely
            (1e20, "100000000000000000000"),
            ("1_0", "1_0"),  # underscore literals stay textual
            ("inf", "inf"),  # non-finite stays textual
        ],
    )
    def test_cell_values(self, value, expected):
        assert canonical_cell(value) == expected

    def test_render_is_idempotent_through_parse(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x = float(rng.normal(0, 100)) * 10 ** int(rng.integers(-6, 6))
            once = render_number(x)
            again = render_number(float(once))
            assert once == again

    def test_parse_number_rejects_junk(self):
        for text in ["", "nan", "inf", "-inf", "1_000", "1,000", "+ 1", "12abc", "0x1f"]:
            assert parse_number(text) is None
        assert parse_number("-12.5e3") == -12500.0


class TestRoundTrip:
    def _random_table(self, rng: np.random.Generator) -> CanonicalTable:
        pool = ["Japan", "USA", "total", "Q1", "2019", "n/a", "x y"]
        n_cols = int(rng.integers(1, 5))
        n_rows = int(rng.integers(0, 5))
        def cell():
            if rng.random() < 0.5:
                return float(np.round(rng.normal(0, 50), 3))
            return pool[int(rng.integers(0, len(pool)))]
        return CanonicalTable.from_values(
            [cell() for _ in range(n_cols)],
            [[cell() for _ in range(n_cols)] for _ in range(n_rows)],
        )

    def test_serialize_then_parse_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            table = self._random_table(rng)
            back = parse_table_json(table.to_schema_text())
            assert back == table

    def test_ragged_constructor_rejected(self):
        with pytest.raises(ValueError):
            CanonicalTable(columns=("A", "B"), rows=(("1",),))

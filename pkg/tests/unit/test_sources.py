# tests/unit/test_sources.py

import gzip
import io
import re

import pytest

from ministra.chunking import map_chunks, parallel_map, split_chunks, statement_starts
from ministra.exceptions import ParseError
from ministra.lexer import TokenStream
from ministra.sources import Source, load_source

_WORDS = re.compile(rb"(?P<ws>[ \t]+)|(?P<nl>\n)|(?P<word>[a-z]+)|(?P<punct>[;=])")


class TestLoadSource:
    def test_bytes(self):
        src = load_source(b"abc", name="x.v")

        assert src == Source("x.v", b"abc")

    def test_path(self, tmp_path):
        path = tmp_path / "top.v"
        path.write_bytes(b"module top; endmodule\n")

        src = load_source(path)

        assert src.name == str(path)
        assert src.data.startswith(b"module")

    def test_gzip_detected_by_magic_not_extension(self, tmp_path):
        path = tmp_path / "plain.txt"
        path.write_bytes(gzip.compress(b"hello\n"))

        assert load_source(path).data == b"hello\n"

    def test_stream(self):
        src = load_source(io.BytesIO(gzip.compress(b"data")))

        assert src.data == b"data"
        assert src.name == "<stream>"

    def test_corrupt_gzip(self):
        with pytest.raises(ParseError, match="corrupt gzip"):
            load_source(b"\x1f\x8b\x08\x00garbage", name="bad.gz")

    def test_source_passes_through(self):
        src = Source("a", b"b")

        assert load_source(src) is src

    def test_line_of(self):
        src = Source("a", b"one\ntwo\nthree")

        assert src.line_of(0) == 1
        assert src.line_of(4) == 2
        assert src.line_of(len(src.data)) == 3


class TestTokenStream:
    def test_tokens_and_lines(self):
        ts = TokenStream(Source("t", b"a = b;\nc;"), _WORDS)

        texts = []
        while not ts.at_end():
            texts.append(ts.next())

        assert [t.text for t in texts] == ["a", "=", "b", ";", "c", ";"]
        assert texts[4].line == 2
        assert texts[4].kind == "word"

    def test_accept_and_expect(self):
        ts = TokenStream(Source("t", b"a = b"), _WORDS)

        assert ts.accept("=") is None
        assert ts.expect_kind("word").text == "a"
        assert ts.expect("=").text == "="
        with pytest.raises(ParseError, match="expected ';', found 'b'"):
            ts.expect(";")

    def test_unexpected_byte_reports_line(self):
        ts = TokenStream(Source("f.txt", b"a\n#"), _WORDS)
        ts.next()

        with pytest.raises(ParseError) as exc_info:
            ts.next()
        assert str(exc_info.value).startswith("f.txt:2: unexpected byte")

    def test_end_of_input(self):
        ts = TokenStream(Source("t", b"   "), _WORDS)

        with pytest.raises(ParseError, match="unexpected end of input"):
            ts.next()

    def test_range_start_counts_lines(self):
        data = b"a;\nb;\nc;"
        ts = TokenStream(Source("t", data), _WORDS, start=data.index(b"c"))

        assert ts.next().line == 3


class TestChunking:
    SPEF = b"*SPEF header\n*D_NET a 1\n*END\n*D_NET b 1\n*END\n*D_NET c 1\n*END\n"

    def test_statement_starts(self):
        assert statement_starts(self.SPEF, "spef") == [13, 29, 45]

    def test_one_chunk(self):
        assert split_chunks(self.SPEF, 1, "spef") == [(0, len(self.SPEF))]

    def test_first_statement_stays_with_header(self):
        ranges = split_chunks(self.SPEF, 8, "spef")

        assert ranges[0][0] == 0
        assert [start for start, _ in ranges[1:]] == [29, 45]
        assert ranges[-1][1] == len(self.SPEF)

    def test_ranges_cover_input(self):
        ranges = split_chunks(Source("s", self.SPEF), 2, "spef")

        assert ranges[0][0] == 0
        assert all(a[1] == b[0] for a, b in zip(ranges, ranges[1:]))
        assert ranges[-1][1] == len(self.SPEF)

    def test_no_boundaries(self):
        assert split_chunks(b"module a; endmodule", 4, "verilog") == [(0, 19)]

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            split_chunks(b"", 0, "sdf")

    @pytest.mark.parametrize("threads", [1, 4])
    def test_parallel_map_keeps_order(self, threads):
        assert parallel_map(lambda x: x * x, list(range(10)), threads) == [x * x for x in range(10)]

    def test_map_chunks(self):
        assert map_chunks(lambda a, b: b - a, [(0, 3), (3, 10)], threads=2) == [3, 7]

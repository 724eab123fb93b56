#include "fraccap/body_io.hpp"

#include <doctest.h>

#include <string>

using namespace fraccap;

namespace {

std::string error_of(const std::string& text)
{
    try {
        parse_body(text, "t.body");
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("body files parse")
{
    const ConvexBody b = parse_body("type = ball\ncenter = 1, 2  # comment\nradius = 0.5\n");
    REQUIRE(b.ball());
    CHECK(b.dim() == 2);
    CHECK(b.ball()->center.y() == doctest::Approx(2.0));
    CHECK(b.grid().size() == 256);

    const ConvexBody p = parse_body("type = polytope\nvertices = 1,1; -1,1; -1,-1; 1,-1\ndirections = 64\n");
    REQUIRE(p.polytope());
    CHECK(p.grid().size() == 64);

    const ConvexBody s3 = parse_body("type = ball\ncenter = 0, 0, 0\nradius = 1\n");
    CHECK(s3.dim() == 3);

    std::string values;
    for (int i = 0; i < 64; ++i) values += (i ? ", " : "") + std::string("1.5");
    const ConvexBody s = parse_body("type = support\ndirections = 64\nvalues = " + values + "\n");
    CHECK(s.support()[10] == doctest::Approx(1.5));
}

TEST_CASE("format_body round trips")
{
    for (const char* text : {"type = ball\ncenter = 0.1, -2\nradius = 3\n", "type = polytope\nvertices = 0,0; 2,0; 0,1\n"}) {
        const ConvexBody a = parse_body(text);
        const ConvexBody b = parse_body(format_body(a));
        REQUIRE(a.support().size() == b.support().size());
        for (std::size_t i = 0; i < a.support().size(); ++i) CHECK(a.support()[i] == doctest::Approx(b.support()[i]).epsilon(1e-15));
    }
}

TEST_CASE("body file errors name the line and key")
{
    CHECK(error_of("type = ball\ncolour = red\n").find("t.body:2: 'colour'") != std::string::npos);
    CHECK(error_of("type = ball\ncenter = 0,0\nradius = 1\nradius = 2\n").find("duplicate") != std::string::npos);
    CHECK(error_of("type = ball\ncenter = 0,0\n").find("'radius'") != std::string::npos);
    CHECK(error_of("type = ball\ncenter = 0,x\nradius = 1\n").find("t.body:2: 'center'") != std::string::npos);
    CHECK(error_of("type = ball\ncenter = 0,0\nradius = -1\n").find("positive") != std::string::npos);
    CHECK(error_of("type = ball\ncenter = 0,0\nradius = nan\n").find("finite") != std::string::npos);
    CHECK(error_of("type = cone\n").find("'type'") != std::string::npos);
    CHECK(error_of("type = ball\ncenter = 0,0\nradius = 1\nvertices = 0,0\n").find("not allowed") != std::string::npos);
    CHECK(error_of("type = polytope\nvertices = 0,0; 1,0\n").find("'vertices'") != std::string::npos);
    CHECK(error_of("type = support\ndirections = 64\nvalues = 1, 2\n").find("expected 64") != std::string::npos);
    CHECK(error_of("just text\n").find("key = value") != std::string::npos);
    CHECK_THROWS_AS(load_body("/nonexistent/x.body"), ParseError);
}

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "relicert/canonical.hpp"

using namespace relicert;

TEST_SUITE_BEGIN("canonical");

namespace {

// Reference value oracle: strip commas from the expected token and parse
// with strtod. The canonical key must parse back to the same value.
double parse_reference(std::string token) {
  std::string cleaned;
  for (char c : token) {
    if (c != ',') cleaned.push_back(c);
  }
  return std::strtod(cleaned.c_str(), nullptr);
}

struct NumericCase {
  const char* text;
  const char* expected_key;  // nullptr = invalid
  const char* value_token;   // token whose numeric value the key must equal
};

}  // namespace

TEST_CASE("numeric extraction over the 50-string corpus") {
  // Hand-checked corpus; every finite expectation is cross-checked against
  // the strtod reference oracle below.
  const std::vector<NumericCase> corpus = {
      {"The answer is 42.", "42", "42"},
      {"#### 1,234.0", "1234", "1234.0"},
      {"no idea", nullptr, nullptr},
      {"42", "42", "42"},
      {"-17", "-17", "-17"},
      {"+17", "17", "17"},
      {"3.50", "3.5", "3.50"},
      {"0.5", "0.5", "0.5"},
      {".5", "0.5", ".5"},
      {"-.25", "-0.25", "-.25"},
      {"007", "7", "007"},
      {"-0", "0", "-0"},
      {"-0.0", "0", "-0.0"},
      {"0.0", "0", "0.0"},
      {"1,000", "1000", "1000"},
      {"12,345,678", "12345678", "12345678"},
      {"1,234.56", "1234.56", "1234.56"},
      {"$1,299.00", "1299", "1299.00"},
      {"answer: 2.0", "2", "2.0"},
      {"first 3 then 7", "7", "7"},
      {"x = -4.20", "-4.2", "-4.20"},
      {"100.", "100", "100"},
      {"pi is about 3.14159", "3.14159", "3.14159"},
      {"#### 42", "42", "42"},
      {"work 10 + 32 #### 42", "42", "42"},
      {"#### -3.0", "-3", "-3.0"},
      {"before #### after 5 more 9", "5", "5"},
      {"#### no digits here", nullptr, nullptr},
      {"#### $2,000", "2000", "2000"},
      {"two delimiters #### 1 #### 2", "2", "2"},
      {"0", "0", "0"},
      {"0.000", "0", "0.000"},
      {"10.010", "10.01", "10.010"},
      {"1,23", "23", "23"},          // not a thousands group
      {"1,2345", "2345", "2345"},    // four digits after comma
      {"99 bottles, 98 bottles", "98", "98"},
      {"answer=-7.5.", "-7.5", "-7.5"},
      {"(6)", "6", "6"},
      {"6%", "6", "6"},
      {"48 / 2 = 24", "24", "24"},
      {"5-3", "-3", "-3"},           // the sign binds to the trailing token
      {"version 2.0.1", "0.1", "0.1"},
      {"£3,141,592.65", "3141592.65", "3141592.65"},
      {"result: 0042.4200", "42.42", "0042.4200"},
      {"", nullptr, nullptr},
      {"....", nullptr, nullptr},
      {"-,", nullptr, nullptr},
      {"the total is 1,024 apples", "1024", "1024"},
      {"#### 012.10", "12.1", "012.10"},
      {"roughly 2.5e3", "3", "3"},  // scientific notation is out of scope
  };
  CHECK(corpus.size() == 50);

  for (const NumericCase& c : corpus) {
    CAPTURE(c.text);
    const CanonicalClass cls = canonicalize_numeric(c.text);
    if (c.expected_key == nullptr) {
      CHECK(cls.kind == CanonKind::invalid);
      CHECK(cls == invalid_class());
    } else {
      CHECK(cls.kind == CanonKind::numeric);
      CHECK(cls.key == c.expected_key);
      // independent value oracle
      const double want = parse_reference(c.value_token);
      const double got = std::strtod(cls.key.c_str(), nullptr);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("numeric canonicalization is idempotent on serialized keys") {
  const std::vector<std::string> inputs = {"42",     "#### 1,234.0", "3.50",
                                           "-0.0",   "007",          ".5",
                                           "-4.20",  "12,345,678",   "0.000"};
  for (const std::string& input : inputs) {
    const CanonicalClass once = canonicalize_numeric(input);
    REQUIRE(once.kind == CanonKind::numeric);
    const CanonicalClass twice = canonicalize_numeric(once.key);
    CHECK(twice == once);
  }
}

TEST_CASE("option letter mapping") {
  const std::vector<std::string> options = {"alpha", "beta", "gamma", "delta"};
  CHECK(canonicalize_option("B", options) ==
        CanonicalClass{"1", CanonKind::option});
  CHECK(canonicalize_option("b", options) ==
        CanonicalClass{"1", CanonKind::option});
  CHECK(canonicalize_option("(C)", options) ==
        CanonicalClass{"2", CanonKind::option});
  CHECK(canonicalize_option("d.", options) ==
        CanonicalClass{"3", CanonKind::option});
  // out of range letter is a failed pick, not a text match
  CHECK(canonicalize_option("E", options).kind == CanonKind::invalid);
}

TEST_CASE("option text matching with exhaustive substring oracle") {
  const std::vector<std::string> options = {"alpha", "beta", "gamma", "delta"};
  CHECK(canonicalize_option("The answer is gamma.", options) ==
        CanonicalClass{"2", CanonKind::option});

  // oracle: on synthetic answer strings, exactly the options whose
  // normalized text occurs as a substring may match; a unique hit must be
  // returned and multiple hits must collapse to invalid
  const std::vector<std::string> answers = {
      "i think it is alpha",      "beta",      "definitely Gamma!",
      "delta or gamma",           "epsilon",   "the alpha and the beta",
      "DELTA",                    "none",      "it's  beta ,  final answer",
      "alphabet",  // 'alpha' occurs inside another word: oracle counts it
  };
  for (const std::string& answer : answers) {
    CAPTURE(answer);
    const std::string norm = normalize_text(answer);
    std::vector<int> hits;
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (norm.find(normalize_text(options[i])) != std::string::npos) {
        hits.push_back(static_cast<int>(i));
      }
    }
    const CanonicalClass got = canonicalize_option(answer, options);
    if (hits.size() == 1) {
      CHECK(got == CanonicalClass{std::to_string(hits[0]), CanonKind::option});
    } else {
      CHECK(got.kind == CanonKind::invalid);
    }
  }
}

TEST_CASE("option ambiguity and validation") {
  const std::vector<std::string> options = {"north east", "east"};
  // 'north east' contains 'east': both match, so the pick is ambiguous
  CHECK(canonicalize_option("heading north east", options).kind ==
        CanonKind::invalid);
  // only 'east' occurs here, so the match is unique
  CHECK(canonicalize_option("going east quickly", options) ==
        CanonicalClass{"1", CanonKind::option});

  CHECK_THROWS_AS(make_canonicalizer("option", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_canonicalizer("option", {"Yes", "yes!"}),
                  std::invalid_argument);  // identical after normalization
}

TEST_CASE("option canonicalization is idempotent on serialized keys") {
  const std::vector<std::string> options = {"alpha", "beta", "gamma", "delta"};
  for (const char* text : {"B", "gamma please", "(D)"}) {
    const CanonicalClass once = canonicalize_option(text, options);
    REQUIRE(once.kind == CanonKind::option);
    CHECK(canonicalize_option(once.key, options) == once);
  }
  // a bare index beyond the option list is a failed pick
  CHECK(canonicalize_option("7", options).kind == CanonKind::invalid);
}

TEST_CASE("binary canonicalization and round trip") {
  CHECK(canonicalize_binary(true) == CanonicalClass{"pass", CanonKind::binary});
  CHECK(canonicalize_binary(false) ==
        CanonicalClass{"fail", CanonKind::binary});
  for (bool flag : {true, false}) {
    const CanonicalClass cls = canonicalize_binary(flag);
    CHECK(canonicalize_binary_text(cls.key) == cls);
  }
  CHECK(canonicalize_binary_text("maybe").kind == CanonKind::invalid);
}

TEST_CASE("verbatim keeps the exact text") {
  CHECK(canonicalize_verbatim("  As Is ") ==
        CanonicalClass{"  As Is ", CanonKind::verbatim});
}

TEST_CASE("canonicalizer registry") {
  CHECK(make_canonicalizer("numeric")("x 9").key == "9");
  CHECK(make_canonicalizer("binary")("pass").key == "pass");
  CHECK(make_canonicalizer("verbatim")("v").key == "v");
  CHECK(make_canonicalizer("option", {"a", "b"})("B").key == "1");
  CHECK_THROWS_AS(make_canonicalizer("fuzzy"), std::invalid_argument);
}

TEST_SUITE_END();

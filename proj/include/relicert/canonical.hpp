#pragma once
// Canonicalization: map raw answer text to a normalized identity so that
// frequency counts measure semantic agreement rather than surface form.
// Parse failures are a real class (Invalid), not an error: they participate
// in ranking like any other answer.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace relicert {

enum class CanonKind { numeric, option, binary, verbatim, invalid };

const char* to_string(CanonKind kind);

struct CanonicalClass {
  std::string key;
  CanonKind kind = CanonKind::invalid;

  bool operator==(const CanonicalClass&) const = default;
  bool operator<(const CanonicalClass& other) const {
    if (kind != other.kind) return kind < other.kind;
    return key < other.key;
  }
};

CanonicalClass invalid_class();

// Extracts the final numeric token (after a '####' delimiter when present,
// otherwise the last number in the text) and normalizes it to a minimal
// decimal string: thousands separators stripped, no leading zeros, no
// trailing fractional zeros, "-0" -> "0".
CanonicalClass canonicalize_numeric(std::string_view text);

// Matches a leading option letter (A-Z) or the normalized option text
// (case-folded, whitespace-collapsed, punctuation-stripped) as a substring.
// Key is the option index as a string. Ambiguous or failed matches are
// Invalid; an in-range leading letter always wins over text matching.
CanonicalClass canonicalize_option(std::string_view text,
                                   const std::vector<std::string>& options);

// Binary outcomes ("pass"/"fail"), e.g. from executing generated code.
CanonicalClass canonicalize_binary(bool pass);

// Text form of the binary canonicalizer so that serialized keys round-trip.
CanonicalClass canonicalize_binary_text(std::string_view text);

CanonicalClass canonicalize_verbatim(std::string_view text);

// Lower-case, strip punctuation to spaces, collapse runs of whitespace.
std::string normalize_text(std::string_view text);

using Canonicalizer = std::function<CanonicalClass(std::string_view)>;

// Canonicalizer by schema name: "numeric" | "option" | "binary" | "verbatim".
// Options are required for "option" and must be non-empty and distinct after
// normalization; violations throw std::invalid_argument.
Canonicalizer make_canonicalizer(const std::string& name,
                                 const std::vector<std::string>& options = {});

}  // namespace relicert

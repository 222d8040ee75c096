#include "relicert/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace relicert {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct NumberToken {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past last char
  bool found = false;
};

// Scan for a number starting at or after `pos`: optional sign, digits with
// optional ",ddd" thousands groups, optional ".digits" fraction. Also accepts
// a bare leading-dot fraction like ".5".
NumberToken scan_number(std::string_view s, std::size_t pos) {
  NumberToken tok;
  const std::size_t n = s.size();
  while (pos < n) {
    // candidate start: digit, or sign/dot directly followed by a digit
    char c = s[pos];
    bool starts = false;
    if (is_digit(c)) {
      starts = true;
    } else if ((c == '-' || c == '+') && pos + 1 < n &&
               (is_digit(s[pos + 1]) ||
                (s[pos + 1] == '.' && pos + 2 < n && is_digit(s[pos + 2])))) {
      starts = true;
    } else if (c == '.' && pos + 1 < n && is_digit(s[pos + 1])) {
      starts = true;
    }
    if (!starts) {
      ++pos;
      continue;
    }
    std::size_t i = pos;
    if (s[i] == '-' || s[i] == '+') ++i;
    std::size_t int_begin = i;
    while (i < n && is_digit(s[i])) ++i;
    // thousands groups: only when the leading group has 1-3 digits and each
    // ",ddd" group is exactly three digits long
    if (i - int_begin >= 1 && i - int_begin <= 3) {
      while (i + 3 < n && s[i] == ',' && is_digit(s[i + 1]) &&
             is_digit(s[i + 2]) && is_digit(s[i + 3]) &&
             (i + 4 >= n || !is_digit(s[i + 4]))) {
        i += 4;
      }
    }
    if (i < n && s[i] == '.' && i + 1 < n && is_digit(s[i + 1])) {
      ++i;
      while (i < n && is_digit(s[i])) ++i;
    }
    if (i > int_begin || (int_begin < n && s[int_begin] == '.')) {
      tok.begin = pos;
      tok.end = i;
      tok.found = true;
      return tok;
    }
    pos = i + 1;
  }
  return tok;
}

NumberToken last_number(std::string_view s) {
  NumberToken last;
  std::size_t pos = 0;
  for (;;) {
    NumberToken t = scan_number(s, pos);
    if (!t.found) break;
    last = t;
    pos = t.end;
  }
  return last;
}

// Minimal decimal form: strip commas, leading zeros, trailing fractional
// zeros; drop an empty fraction; "-0" -> "0".
std::string normalize_number(std::string_view raw) {
  std::string digits;
  bool negative = false;
  std::string int_part, frac_part;
  bool in_frac = false;
  for (char c : raw) {
    if (c == ',') continue;
    if (c == '+') continue;
    if (c == '-') {
      negative = true;
      continue;
    }
    if (c == '.') {
      in_frac = true;
      continue;
    }
    (in_frac ? frac_part : int_part).push_back(c);
  }
  std::size_t first = int_part.find_first_not_of('0');
  int_part = (first == std::string::npos) ? "" : int_part.substr(first);
  std::size_t last = frac_part.find_last_not_of('0');
  frac_part = (last == std::string::npos) ? "" : frac_part.substr(0, last + 1);
  if (int_part.empty()) int_part = "0";
  bool is_zero = int_part == "0" && frac_part.empty();
  std::string out;
  if (negative && !is_zero) out.push_back('-');
  out += int_part;
  if (!frac_part.empty()) {
    out.push_back('.');
    out += frac_part;
  }
  return out;
}

}  // namespace

const char* to_string(CanonKind kind) {
  switch (kind) {
    case CanonKind::numeric: return "numeric";
    case CanonKind::option: return "option";
    case CanonKind::binary: return "binary";
    case CanonKind::verbatim: return "verbatim";
    case CanonKind::invalid: return "invalid";
  }
  return "invalid";
}

CanonicalClass invalid_class() { return {"INVALID", CanonKind::invalid}; }

CanonicalClass canonicalize_numeric(std::string_view text) {
  NumberToken tok;
  std::size_t delim = text.rfind("####");
  if (delim != std::string_view::npos) {
    // the delimiter marks the answer slot: take the first number after it
    tok = scan_number(text, delim + 4);
  } else {
    tok = last_number(text);
  }
  if (!tok.found) return invalid_class();
  std::string key =
      normalize_number(text.substr(tok.begin, tok.end - tok.begin));
  return {key, CanonKind::numeric};
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

CanonicalClass canonicalize_option(std::string_view text,
                                   const std::vector<std::string>& options) {
  if (options.empty()) throw std::invalid_argument("options must be non-empty");

  // Leading option letter. Fires only when the letter is clearly a pick:
  // the sole alphanumeric content ("B", "(C)", "d.") or followed by a
  // separator ("B) because ...", "C: the answer"). A letter followed by
  // ordinary words ("I think ...", "A cat") is not a pick.
  std::size_t i = 0;
  while (i < text.size() &&
         !std::isalnum(static_cast<unsigned char>(text[i]))) {
    ++i;
  }
  if (i < text.size() &&
      std::isalpha(static_cast<unsigned char>(text[i])) &&
      (i + 1 >= text.size() ||
       !std::isalnum(static_cast<unsigned char>(text[i + 1])))) {
    bool more_content = false;
    for (std::size_t j = i + 1; j < text.size(); ++j) {
      if (std::isalnum(static_cast<unsigned char>(text[j]))) {
        more_content = true;
        break;
      }
    }
    const bool separator =
        i + 1 < text.size() &&
        (text[i + 1] == '.' || text[i + 1] == ')' || text[i + 1] == ':' ||
         text[i + 1] == '-');
    if (!more_content || separator) {
      const int index =
          std::toupper(static_cast<unsigned char>(text[i])) - 'A';
      if (index >= 0 && index < static_cast<int>(options.size())) {
        return {std::to_string(index), CanonKind::option};
      }
      return invalid_class();  // a clear pick out of range is a failure
    }
  }

  // a bare index is the canonical serialization; accept it back so that
  // canon(serialize(canon(x))) round-trips
  const std::string norm = normalize_text(text);
  if (!norm.empty() &&
      norm.find_first_not_of("0123456789") == std::string::npos) {
    const long index = std::strtol(norm.c_str(), nullptr, 10);
    if (index >= 0 && index < static_cast<long>(options.size())) {
      return {std::to_string(index), CanonKind::option};
    }
    return invalid_class();
  }

  int matched = -1;
  for (std::size_t k = 0; k < options.size(); ++k) {
    const std::string opt = normalize_text(options[k]);
    if (opt.empty()) continue;
    if (norm.find(opt) != std::string::npos) {
      if (matched >= 0) return invalid_class();  // ambiguous
      matched = static_cast<int>(k);
    }
  }
  if (matched < 0) return invalid_class();
  return {std::to_string(matched), CanonKind::option};
}

CanonicalClass canonicalize_binary(bool pass) {
  return {pass ? "pass" : "fail", CanonKind::binary};
}

CanonicalClass canonicalize_binary_text(std::string_view text) {
  const std::string norm = normalize_text(text);
  if (norm == "pass" || norm == "true" || norm == "1") {
    return canonicalize_binary(true);
  }
  if (norm == "fail" || norm == "false" || norm == "0") {
    return canonicalize_binary(false);
  }
  return invalid_class();
}

CanonicalClass canonicalize_verbatim(std::string_view text) {
  return {std::string(text), CanonKind::verbatim};
}

Canonicalizer make_canonicalizer(const std::string& name,
                                 const std::vector<std::string>& options) {
  if (name == "numeric") {
    return [](std::string_view t) { return canonicalize_numeric(t); };
  }
  if (name == "option") {
    if (options.empty()) {
      throw std::invalid_argument(
          "option canonicalizer requires a non-empty option list");
    }
    std::vector<std::string> normalized;
    normalized.reserve(options.size());
    for (const auto& o : options) normalized.push_back(normalize_text(o));
    std::vector<std::string> sorted = normalized;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument(
          "options must be distinct after normalization");
    }
    return [options](std::string_view t) {
      return canonicalize_option(t, options);
    };
  }
  if (name == "binary") {
    return [](std::string_view t) { return canonicalize_binary_text(t); };
  }
  if (name == "verbatim") {
    return [](std::string_view t) { return canonicalize_verbatim(t); };
  }
  throw std::invalid_argument("unknown canonicalizer: " + name);
}

}  // namespace relicert

#include "prl/synth_corpus.hpp"

#include <spdlog/spdlog.h>

#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <algorithm>

#include "prl/util.hpp"

namespace prl {
namespace {

using Bindings = std::map<std::string, std::string>;

// A family is a Python problem with placeholders. Each choice group binds
// one or more placeholders together (e.g. an operator and its wording).
struct Family {
  const char* name;
  std::vector<const char*> function_names;
  const char* description;
  const char* code;
  std::vector<std::vector<Bindings>> choices;
  std::vector<const char*> inputs;  // argument lists; 3 become seed tests
};

const std::vector<Bindings> kLoopVar = {
    {{"v", "x"}}, {{"v", "n"}}, {{"v", "num"}}, {{"v", "val"}}, {{"v", "item"}}};
const std::vector<Bindings> kAcc = {
    {{"acc", "total"}}, {{"acc", "s"}}, {{"acc", "result"}}, {{"acc", "acc"}}};
const std::vector<Bindings> kSmallK = {{{"K", "0"}}, {{"K", "1"}}, {{"K", "2"}}};
const std::vector<Bindings> kList = {{{"lst", "nums"}}, {{"lst", "arr"}},
                                     {{"lst", "numbers"}}};

const std::vector<Family>& families() {
  static const std::vector<Family> kFamilies = {
      {"sum_above",
       {"sum_greater", "sum_above", "total_above"},
       "Write a function to find the sum of the numbers in a list that are "
       "greater than {K}.",
       "def {f}({lst}):\n    {acc} = 0\n    for {v} in {lst}:\n        if {v} > "
       "{K}:\n            {acc} += {v}\n    return {acc}\n",
       {kSmallK, kAcc, kLoopVar, kList},
       {"[5, 6, 7]", "[10, 4]", "[]", "[3, 8, 9, 4]", "[-1, 0, 1, 2, 3]",
        "[1, 2]"}},
      {"count_cmp",
       {"count_elements", "count_matching", "num_count"},
       "Write a python function to count the elements of a list that are "
       "{word} {K}.",
       "def {f}({lst}):\n    count = 0\n    for {v} in {lst}:\n        if {v} "
       "{op} {K}:\n            count += 1\n    return count\n",
       {{{{"op", ">"}, {"word", "greater than"}},
         {{"op", "<"}, {"word", "less than"}},
         {{"op", "=="}, {"word", "equal to"}}},
        kSmallK,
        kLoopVar,
        kList},
       {"[4, 5, 6]", "[9]", "[]", "[0, 1, 2, 3]", "[-2, 2, 7]",
        "[1, 1, 1]"}},
      {"extreme_manual",
       {"find_extreme", "list_extreme", "extreme_value"},
       "Write a function to find the {word} element of a non-empty list "
       "without using built-in functions.",
       "def {f}({lst}):\n    best = {lst}[0]\n    for {v} in {lst}[1:]:\n      "
       "  if {v} {op} best:\n            best = {v}\n    return best\n",
       {{{{"op", ">"}, {"word", "largest"}}, {{"op", "<"}, {"word", "smallest"}}},
        kLoopVar,
        kList},
       {"[3, 1, 2]", "[7]", "[1, 5, 9]", "[4, 4, 2]", "[-3, -1, -2]",
        "[2, 8, 6]"}},
      {"factorial",
       {"factorial", "fact", "compute_factorial"},
       "Write a function to calculate the factorial of a number.",
       "def {f}(n):\n    {acc} = 1\n    for i in range(2, n + 1):\n        {acc} "
       "*= i\n    return {acc}\n",
       {kAcc},
       {"3", "4", "5", "0", "1", "6"}},
      {"fibonacci",
       {"fibonacci", "fib", "nth_fibonacci"},
       "Write a function to find the n-th fibonacci number.",
       "def {f}(n):\n    a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a "
       "+ b\n    return a\n",
       {},
       {"7", "9", "10", "0", "1", "2"}},
      {"is_prime",
       {"is_prime", "prime_num", "check_prime"},
       "Write a function to check if the given integer is a prime number.",
       "def {f}(n):\n    if n < 2:\n        return False\n    i = 2\n    while i "
       "* i <= n:\n        if n % i == 0:\n            return False\n        i "
       "+= 1\n    return True\n",
       {},
       {"13", "7", "10", "1", "2", "25"}},
      {"gcd",
       {"gcd", "find_gcd", "greatest_common_divisor"},
       "Write a function to find the greatest common divisor of two "
       "integers.",
       "def {f}(a, b):\n    while b != 0:\n        a, b = b, a % b\n    return "
       "a\n",
       {},
       {"12, 8", "9, 6", "7, 5", "10, 0", "0, 4", "21, 14"}},
      {"digit_sum",
       {"sum_digits", "digit_sum", "sum_of_digits"},
       "Write a function to get the sum of the digits of an integer.",
       "def {f}(n):\n    {acc} = 0\n    n = abs(n)\n    while n > 0:\n        "
       "{acc} += n % 10\n        n //= 10\n    return {acc}\n",
       {kAcc},
       {"345", "12", "99", "0", "-21", "7"}},
      {"reverse_words",
       {"reverse_words", "reverse_sentence", "words_reversed"},
       "Write a function to reverse the order of words in a given string.",
       "def {f}(s):\n    words = s.split()\n    words.reverse()\n    return \" "
       "\".join(words)\n",
       {},
       {"\"python program\"", "\"a b c\"", "\"hello\"", "\"\"",
        "\"one two\""}},
      {"palindrome",
       {"is_palindrome", "check_palindrome", "palindrome"},
       "Write a function to check whether a string is a palindrome, ignoring "
       "case.",
       "def {f}(s):\n    cleaned = s.lower()\n    return cleaned == "
       "cleaned[::-1]\n",
       {},
       {"\"Level\"", "\"abc\"", "\"noon\"", "\"\"", "\"ab\"", "\"Aba\""}},
      {"count_vowels",
       {"count_vowels", "vowel_count", "num_vowels"},
       "Write a python function to count the number of vowels in a string.",
       "def {f}(s):\n    count = 0\n    for ch in s.lower():\n        if ch in "
       "\"aeiou\":\n            count += 1\n    return count\n",
       {},
       {"\"program\"", "\"AEIOU\"", "\"sky\"", "\"\"", "\"banana\""}},
      {"sign",
       {"sign", "sign_of", "get_sign"},
       "Write a function that returns 1 for positive numbers, -1 for negative "
       "numbers and 0 for zero.",
       "def {f}(x):\n    if x > 0:\n        return 1\n    elif x < 0:\n        "
       "return -1\n    return 0\n",
       {},
       {"5", "2", "-4", "0", "-1", "1"}},
      {"clamp",
       {"clamp", "clip_value", "bound_value"},
       "Write a function to clamp a number to the inclusive range [lo, hi].",
       "def {f}(x, lo, hi):\n    if x < lo:\n        return lo\n    if x > "
       "hi:\n        return hi\n    return x\n",
       {},
       {"5, 0, 10", "-3, 0, 10", "2, 1, 3", "12, 0, 10", "0, 0, 10",
        "10, 0, 10"}},
      {"abs_diff",
       {"abs_diff", "difference", "distance"},
       "Write a function to find the absolute difference of two numbers.",
       "def {f}(a, b):\n    if a > b:\n        return a - b\n    return b - "
       "a\n",
       {},
       {"7, 3", "10, 4", "2, 9", "5, 5", "-1, 1", "0, 3"}},
      {"leap_year",
       {"is_leap", "leap_year", "check_leap"},
       "Write a function to check whether the given year is a leap year.",
       "def {f}(year):\n    if year % 400 == 0:\n        return True\n    if "
       "year % 100 == 0:\n        return False\n    return year % 4 == 0\n",
       {},
       {"2024", "2023", "2000", "1900", "2100", "1996"}},
      {"grade",
       {"grade", "letter_grade", "score_to_grade"},
       "Write a function to convert a numeric score to a letter grade.",
       "def {f}(score):\n    if score >= 90:\n        return \"A\"\n    elif "
       "score >= 80:\n        return \"B\"\n    elif score >= 70:\n        "
       "return \"C\"\n    return \"F\"\n",
       {},
       {"95", "85", "50", "70", "90", "79"}},
      {"triangle_type",
       {"triangle_type", "classify_triangle", "kind_of_triangle"},
       "Write a function to classify a triangle by its side lengths.",
       "def {f}(a, b, c):\n    if a == b and b == c:\n        return "
       "\"equilateral\"\n    if a == b or b == c or a == c:\n        return "
       "\"isosceles\"\n    return \"scalene\"\n",
       {},
       {"3, 3, 3", "3, 4, 5", "2, 2, 3", "5, 4, 4", "4, 5, 4", "6, 7, 8"}},
      {"second_largest",
       {"second_largest", "second_max", "runner_up"},
       "Write a function to find the second largest distinct number in a "
       "list.",
       "def {f}({lst}):\n    uniq = sorted(set({lst}))\n    if len(uniq) < "
       "2:\n        return None\n    return uniq[-2]\n",
       {kList},
       {"[1, 2, 3]", "[5, 5, 4]", "[9, 1, 8]", "[1]", "[2, 2]", "[]"}},
      {"dedupe",
       {"remove_duplicates", "unique_items", "dedupe"},
       "Write a function to remove duplicate elements from a list while "
       "preserving order.",
       "def {f}(items):\n    seen = []\n    for item in items:\n        if item "
       "not in seen:\n            seen.append(item)\n    return seen\n",
       {},
       {"[1, 2, 2, 3]", "[4, 4]", "[1, 2]", "[]", "[3, 1, 3, 1]"}},
      {"even_squares",
       {"even_squares", "square_evens", "squares_of_even"},
       "Write a function to return the squares of the even numbers in a "
       "list.",
       "def {f}({lst}):\n    out = []\n    for {v} in {lst}:\n        if {v} % 2 "
       "== 0:\n            out.append({v} * {v})\n    return out\n",
       {kLoopVar, kList},
       {"[1, 2, 3, 4]", "[2, 6]", "[5, 8]", "[]", "[1, 3]", "[0, -2]"}},
      {"index_of",
       {"index_of", "find_index", "first_index"},
       "Write a function to find the index of the first occurrence of a "
       "target in a list, or -1 if absent.",
       "def {f}(items, target):\n    for i in range(len(items)):\n        if "
       "items[i] == target:\n            return i\n    return -1\n",
       {},
       {"[4, 5, 6], 5", "[1, 2, 3], 1", "[7, 8], 8", "[1, 2], 9", "[], 1",
        "[3, 3], 3"}},
      {"sum_even_positions",
       {"sum_even_index", "sum_alternate", "even_position_sum"},
       "Write a function to sum the elements at even indices of a list.",
       "def {f}({lst}):\n    {acc} = 0\n    for i in range(0, len({lst}), 2):\n  "
       "      {acc} += {lst}[i]\n    return {acc}\n",
       {kAcc, kList},
       {"[1, 2, 3, 4]", "[5]", "[2, 9, 4]", "[]", "[1, 1, 1, 1, 1]"}},
      {"power",
       {"power", "pow_loop", "raise_power"},
       "Write a function to calculate the value of base raised to a "
       "non-negative integer exponent.",
       "def {f}(base, exp):\n    {acc} = 1\n    for _ in range(exp):\n        "
       "{acc} *= base\n    return {acc}\n",
       {kAcc},
       {"2, 3", "3, 2", "5, 1", "7, 0", "-2, 3", "1, 5"}},
      {"product",
       {"product", "list_product", "multiply_all"},
       "Write a python function to multiply all the numbers in a list.",
       "def {f}({lst}):\n    {acc} = 1\n    for {v} in {lst}:\n        {acc} *= "
       "{v}\n    return {acc}\n",
       {kAcc, kLoopVar, kList},
       {"[2, 3, 4]", "[5]", "[1, 2]", "[]", "[-1, 3]", "[0, 9]"}},
      {"running_max",
       {"running_max", "prefix_max", "cumulative_max"},
       "Write a function to compute the running maximum of a list.",
       "def {f}({lst}):\n    out = []\n    current = None\n    for {v} in "
       "{lst}:\n        if current is None or {v} > current:\n            "
       "current = {v}\n        out.append(current)\n    return out\n",
       {kLoopVar, kList},
       {"[1, 3, 2]", "[5, 6]", "[2, 2]", "[]", "[4, 1, 7]"}},
      {"alternating_sum",
       {"alternating_sum", "alt_sum", "plus_minus_sum"},
       "Write a function to compute the alternating sum of a list (add, "
       "subtract, add, ...).",
       "def {f}({lst}):\n    {acc} = 0\n    for i, {v} in enumerate({lst}):\n    "
       "    if i % 2 == 0:\n            {acc} += {v}\n        else:\n          "
       "  {acc} -= {v}\n    return {acc}\n",
       {kAcc, kLoopVar, kList},
       {"[5, 3]", "[1, 2, 3]", "[10]", "[]", "[4, 4, 4, 4]"}},
      {"pairwise_diff",
       {"pairwise_diff", "consecutive_diff", "differences"},
       "Write a function to get the differences between consecutive elements "
       "of a list.",
       "def {f}({lst}):\n    return [{lst}[i + 1] - {lst}[i] for i in "
       "range(len({lst}) - 1)]\n",
       {kList},
       {"[1, 4, 9]", "[5, 5]", "[3, 1]", "[]", "[7]"}},
      {"rotate",
       {"rotate_right", "rotate_list", "shift_right"},
       "Write a function to rotate a list to the right by k positions.",
       "def {f}(items, k):\n    if not items:\n        return items\n    k = k % "
       "len(items)\n    return items[-k:] + items[:-k]\n",
       {},
       {"[1, 2, 3], 1", "[1, 2, 3, 4], 2", "[5, 6], 1", "[], 3",
        "[1, 2, 3], 0", "[1, 2, 3], 4"}},
      {"count_upper",
       {"count_upper", "upper_count", "num_capitals"},
       "Write a python function to count the upper case characters in a "
       "string.",
       "def {f}(s):\n    count = 0\n    for ch in s:\n        if "
       "ch.isupper():\n            count += 1\n    return count\n",
       {},
       {"\"PYthon\"", "\"ABC\"", "\"Hello World\"", "\"\"", "\"abc\""}},
      {"capitalize_words",
       {"capitalize_words", "title_words", "cap_each_word"},
       "Write a function to capitalize the first letter of every word in a "
       "string.",
       "def {f}(s):\n    words = s.split(\" \")\n    return \" "
       "\".join(w.capitalize() for w in words)\n",
       {},
       {"\"hello world\"", "\"python\"", "\"a b\"", "\"\"",
        "\"big red dog\"", "\"x\""}},
      {"longest_run",
       {"longest_run", "max_streak", "longest_repeat"},
       "Write a function to find the length of the longest run of equal "
       "consecutive elements.",
       "def {f}({lst}):\n    if not {lst}:\n        return 0\n    best = 1\n    "
       "run = 1\n    for i in range(1, len({lst})):\n        if {lst}[i] == "
       "{lst}[i - 1]:\n            run += 1\n        else:\n            run = "
       "1\n        best = max(best, run)\n    return best\n",
       {kList},
       {"[1, 1, 2]", "[3, 3, 3]", "[1, 2, 3]", "[]", "[2, 2, 1, 1, 1]"}},
      {"triangular",
       {"triangular", "sum_to_n", "triangle_number"},
       "Write a function to find the sum of the integers from 1 to n.",
       "def {f}(n):\n    {acc} = 0\n    for i in range(1, n + 1):\n        {acc} "
       "+= i\n    return {acc}\n",
       {kAcc},
       {"4", "10", "1", "0", "3", "-2"}},
      {"long_words",
       {"long_words", "filter_long", "words_longer"},
       "Write a function to keep the words that are longer than {K} "
       "characters.",
       "def {f}(words):\n    {acc} = []\n    for w in words:\n        if len(w) "
       "> {K}:\n            {acc}.append(w)\n    return {acc}\n",
       {kSmallK, kAcc},
       {"[\"apple\", \"kiwi\"]", "[\"banana\"]", "[]", "[\"a\", \"bb\"]",
        "[\"\", \"abc\"]"}},
      {"is_sorted",
       {"is_sorted", "check_sorted", "sorted_ascending"},
       "Write a function to check whether a list is sorted in non-decreasing "
       "order.",
       "def {f}({lst}):\n    for i in range(len({lst}) - 1):\n        if "
       "{lst}[i] > {lst}[i + 1]:\n            return False\n    return True\n",
       {kList},
       {"[1, 2, 3]", "[3, 1]", "[1, 2, 2]", "[]", "[5]", "[2, 1, 3]"}},
      {"pos_neg_count",
       {"pos_neg_count", "count_signs", "sign_counts"},
       "Write a function to count the positive and negative numbers in a "
       "list.",
       "def {f}({lst}):\n    pos = 0\n    neg = 0\n    for {v} in {lst}:\n      "
       "  if {v} > 0:\n            pos += 1\n        elif {v} < 0:\n          "
       "  neg += 1\n    return (pos, neg)\n",
       {kLoopVar, kList},
       {"[1, 2, -3]", "[4, 5]", "[-1]", "[]", "[0, 0]", "[0, -2, 3]"}},
      {"spread",
       {"spread", "range_of", "max_min_diff"},
       "Write a python function to find the difference between the largest "
       "and smallest values in a list.",
       "def {f}({lst}):\n    if not {lst}:\n        return 0\n    return "
       "max({lst}) - min({lst})\n",
       {kList},
       {"[1, 5, 3]", "[4, 9]", "[7]", "[]", "[-2, 2]"}},
      {"most_common_char",
       {"most_common_char", "max_char", "frequent_char"},
       "Write a function to find the most frequent character in a string.",
       "def {f}(s):\n    counts = {}\n    for ch in s:\n        counts[ch] = "
       "counts.get(ch, 0) + 1\n    best = None\n    for ch in s:\n        if "
       "best is None or counts[ch] > counts[best]:\n            best = ch\n    "
       "return best\n",
       {},
       {"\"hello\"", "\"aab\"", "\"abcc\"", "\"\"", "\"x\""}},
      {"to_binary",
       {"to_binary", "binary_string", "decimal_to_binary"},
       "Write a function to convert a non-negative integer to its binary "
       "representation as a string.",
       "def {f}(n):\n    if n == 0:\n        return \"0\"\n    bits = \"\"\n    "
       "while n > 0:\n        bits = str(n % 2) + bits\n        n //= 2\n    "
       "return bits\n",
       {},
       {"5", "8", "3", "0", "1", "10"}},
      {"average",
       {"average", "mean_value", "list_mean"},
       "Write a function to find the average of a list of numbers, returning "
       "0 for an empty list.",
       "def {f}({lst}):\n    if len({lst}) == 0:\n        return 0\n    return "
       "sum({lst}) / len({lst})\n",
       {kList},
       {"[1, 2, 3]", "[4, 4]", "[10]", "[]", "[1, 2]"}},
      {"fizzbuzz",
       {"fizzbuzz", "fizz_buzz", "fb_value"},
       "Write a function that returns Fizz, Buzz, FizzBuzz or the number as "
       "a string.",
       "def {f}(n):\n    if n % 15 == 0:\n        return \"FizzBuzz\"\n    if n "
       "% 3 == 0:\n        return \"Fizz\"\n    if n % 5 == 0:\n        "
       "return \"Buzz\"\n    return str(n)\n",
       {},
       {"3", "7", "9", "15", "5", "0"}},
      {"count_char",
       {"count_char", "char_frequency", "occurrences"},
       "Write a python function to count the occurrences of a character in a "
       "string.",
       "def {f}(s, ch):\n    count = 0\n    for c in s:\n        if c == ch:\n "
       "           count += 1\n    return count\n",
       {},
       {"\"banana\", \"a\"", "\"hello\", \"l\"", "\"abc\", \"z\"",
        "\"\", \"a\"", "\"aaa\", \"a\""}},
      {"merge_sorted",
       {"merge_sorted", "merge_lists", "combine_sorted"},
       "Write a function to merge two sorted lists into one sorted list.",
       "def {f}(a, b):\n    i = 0\n    j = 0\n    out = []\n    while i < len(a) "
       "and j < len(b):\n        if a[i] <= b[j]:\n            "
       "out.append(a[i])\n            i += 1\n        else:\n            "
       "out.append(b[j])\n            j += 1\n    return out + a[i:] + b[j:]\n",
       {},
       {"[1, 3], [2, 4]", "[1, 2], [3]", "[], [1]", "[5], []",
        "[1, 1], [1]"}},
      {"cube_volume",
       {"cube_volume", "volume_cube", "cube"},
       "Write a function to find the volume of a cube.",
       "def {f}(side):\n    return side * side * side\n",
       {},
       {"3", "2", "5", "0", "1", "-2"}},
      {"rect_perimeter",
       {"rect_perimeter", "perimeter", "rectangle_perimeter"},
       "Write a function to find the perimeter of a rectangle.",
       "def {f}(length, width):\n    return 2 * (length + width)\n",
       {},
       {"10, 20", "4, 2", "1, 1", "0, 3", "3, 0"}},
      {"swap_ends",
       {"swap_ends", "swap_first_last", "exchange_ends"},
       "Write a python function to interchange the first and last elements "
       "of a list.",
       "def {f}(items):\n    if len(items) < 2:\n        return items\n    "
       "items[0], items[-1] = items[-1], items[0]\n    return items\n",
       {},
       {"[1, 2, 3]", "[4, 5]", "[1, 2, 3, 4]", "[]", "[7]"}},
      {"sum_squares",
       {"sum_squares", "square_sum", "sum_of_squares"},
       "Write a python function to find the sum of the squares of the first "
       "n natural numbers.",
       "def {f}(n):\n    {acc} = 0\n    for i in range(1, n + 1):\n        {acc} "
       "+= i * i\n    return {acc}\n",
       {kAcc},
       {"2", "3", "4", "0", "1", "5"}},
  };
  return kFamilies;
}

std::string substitute(std::string text, const Bindings& b) {
  for (const auto& [key, value] : b) {
    const std::string ph = "{" + key + "}";
    for (auto pos = text.find(ph); pos != std::string::npos;
         pos = text.find(ph, pos + value.size())) {
      text.replace(pos, ph.size(), value);
    }
  }
  return text;
}

SynthTask draw_task(const Family& fam, int id, std::mt19937_64& rng) {
  Bindings b;
  b["f"] = fam.function_names[rng() % fam.function_names.size()];
  for (const auto& group : fam.choices) {
    for (const auto& [k, v] : group[rng() % group.size()]) b[k] = v;
  }
  SynthTask t;
  t.id = id;
  t.family = fam.name;
  t.function_name = b["f"];
  t.description = substitute(fam.description, b);
  t.code = substitute(fam.code, b);
  // Three distinct inputs; later list entries (edge cases) are less likely
  // to be drawn, which keeps seed tests realistically weak.
  std::vector<std::size_t> idx;
  const std::size_t n = fam.inputs.size();
  while (idx.size() < 3 && idx.size() < n) {
    const std::size_t a = rng() % n;
    const std::size_t c = rng() % n;
    const std::size_t i = std::min(a, c);
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  for (const auto i : idx) t.seed_args.push_back(substitute(fam.inputs[i], b));
  return t;
}

}  // namespace

std::size_t synth_family_count() { return families().size(); }

std::vector<SynthTask> synth_tasks(int count, std::uint64_t seed) {
  const auto& fams = families();
  std::vector<SynthTask> out;
  std::set<std::string> seen;
  for (int id = 1; id <= count; ++id) {
    const auto& fam = fams[static_cast<std::size_t>(id - 1) % fams.size()];
    std::mt19937_64 rng(combine_seed(seed, static_cast<std::uint64_t>(id)));
    // Redraw until the prompt (description, name, seed inputs) is new.
    for (int attempt = 0;; ++attempt) {
      auto t = draw_task(fam, id, rng);
      auto key = t.description + "\x1f" + t.function_name;
      auto args = t.seed_args;
      std::sort(args.begin(), args.end());
      for (const auto& a : args) key += "\x1f" + a;
      if (seen.insert(key).second || attempt == 1000) {
        out.push_back(std::move(t));
        break;
      }
    }
  }
  return out;
}

std::string synth_corpus_jsonl(const std::vector<SynthTask>& tasks,
                               const Sandbox& sandbox) {
  std::string out;
  ResourceLimits limits;
  for (const auto& t : tasks) {
    std::string script = t.code + "\nimport sys\n";
    for (const auto& args : t.seed_args) {
      script += "try:\n    sys.stdout.write(repr(" + t.function_name + "(" +
                args + ")) + '\\n')\nexcept BaseException:\n    "
                "sys.stdout.write('<error>\\n')\n";
    }
    // run_script discards stdout, so route results through stderr.
    script = "import sys\nsys.stdout = sys.stderr\n" + script;
    const auto r = sandbox.run_script(script, limits, 1u << 20);
    const auto lines = split(trim(r.stderr_tail), '\n');
    if (r.exit_code != 0 || lines.size() != t.seed_args.size()) {
      spdlog::warn("synth task {} ({}): reference run failed", t.id, t.family);
      continue;
    }
    nlohmann::json j;
    j["task_id"] = t.id;
    j["text"] = t.description;
    j["code"] = t.code;
    std::vector<std::string> tests;
    bool ok = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i] == "<error>") ok = false;
      tests.push_back("assert " + t.function_name + "(" + t.seed_args[i] +
                      ") == " + lines[i]);
    }
    if (!ok) {
      spdlog::warn("synth task {} ({}): reference raised on a seed input",
                   t.id, t.family);
      continue;
    }
    j["test_list"] = tests;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace prl

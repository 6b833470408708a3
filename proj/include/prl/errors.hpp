#ifndef PRL_ERRORS_HPP_
#define PRL_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prl {

// Base for every domain error raised by the pipeline. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PRL_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

PRL_DEFINE_ERROR(DuplicateId);
PRL_DEFINE_ERROR(UnmappedId);
PRL_DEFINE_ERROR(NoApplicableRule);
PRL_DEFINE_ERROR(TeacherUnavailable);
PRL_DEFINE_ERROR(MalformedTeacherResponse);
PRL_DEFINE_ERROR(EditIdenticalToOriginal);
PRL_DEFINE_ERROR(SandboxSetupFailure);
PRL_DEFINE_ERROR(AlignmentError);
PRL_DEFINE_ERROR(DegenerateData);
PRL_DEFINE_ERROR(InvalidInput);
PRL_DEFINE_ERROR(InvalidArgs);
PRL_DEFINE_ERROR(NonFiniteLoss);
PRL_DEFINE_ERROR(ShimUnavailable);
PRL_DEFINE_ERROR(NoCandidates);
PRL_DEFINE_ERROR(PreconditionViolation);
PRL_DEFINE_ERROR(ConfigError);
PRL_DEFINE_ERROR(IoError);

#undef PRL_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t record_index, const std::string& what)
      : Error("record " + std::to_string(record_index) + ": " + what),
        record_index_(record_index) {}
  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_;
};

class MixedIndentationUnresolvable : public Error {
 public:
  explicit MixedIndentationUnresolvable(std::size_t line_number)
      : Error("mixed tabs and spaces in indentation at line " +
              std::to_string(line_number)),
        line_number_(line_number) {}
  // 1-based.
  std::size_t line_number() const { return line_number_; }

 private:
  std::size_t line_number_;
};

}  // namespace prl

#endif  // PRL_ERRORS_HPP_

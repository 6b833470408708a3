#include <httplib.h>

#include <json.hpp>

#include "prl/errors.hpp"
#include "prl/mutator.hpp"
#include "prl/pylex.hpp"
#include "prl/util.hpp"

namespace prl {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url parse_url(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw TeacherUnavailable("endpoint is not a URL: " + endpoint);
  }
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<64>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<64>& s_;
};

}  // namespace

TeacherClient::TeacherClient(std::string endpoint, Options options)
    : endpoint_(std::move(endpoint)),
      options_(options),
      slots_(std::make_unique<std::counting_semaphore<64>>(
          std::clamp<std::ptrdiff_t>(options.max_in_flight, 1, 64))) {}

TeacherClient::~TeacherClient() = default;

std::string TeacherClient::request_field(const std::string& body_json,
                                         const std::string& field) {
  const auto url = parse_url(endpoint_);
  httplib::Result res;
  {
    SlotGuard guard(*slots_);
    httplib::Client cli(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
        options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        options_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    res = cli.Post(url.path, body_json, "application/json");
  }
  if (!res) {
    throw TeacherUnavailable("teacher request failed: " +
                             httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TeacherUnavailable("teacher returned HTTP " +
                             std::to_string(res->status));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTeacherResponse(std::string("response is not JSON: ") +
                                   e.what());
  }
  if (!j.is_object() || !j.contains(field) || !j.at(field).is_string()) {
    throw MalformedTeacherResponse("response lacks string field " + field);
  }
  return j.at(field).get<std::string>();
}

LineEdit TeacherClient::rewrite(std::string_view line, const CodeLines& context,
                                EditMode mode, std::string_view problem_text) {
  nlohmann::json body;
  body["mode"] = std::string(to_string(mode));
  body["line"] = std::string(line);
  body["context"] = context.joined();
  body["problem"] = std::string(problem_text);
  const auto raw = request_field(body.dump(), "rewritten_line");
  LineEdit edit;
  edit.original_line = std::string(line);
  edit.edited_line = clean_teacher_line(raw, line);
  edit.mode = mode;
  edit.provenance = "external_teacher";
  return edit;
}

std::string clean_teacher_line(std::string_view raw,
                               std::string_view original) {
  std::string first;
  for (const auto& l : split(raw, '\n')) {
    if (!trim(l).empty()) {
      first = std::string(trim(l));
      break;
    }
  }
  if (first.empty()) {
    throw MalformedTeacherResponse("teacher returned an empty rewrite");
  }
  std::string edited = std::string(pylex::indent_of(original)) + first;
  auto squash = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
  };
  if (squash(edited) == squash(original)) {
    throw EditIdenticalToOriginal("teacher rewrite equals the original line");
  }
  return edited;
}

LineEdit teacher_rewrite(std::string_view line, const CodeLines& context,
                         EditMode mode, const std::string& endpoint) {
  TeacherClient client(endpoint);
  return client.rewrite(line, context, mode);
}

}  // namespace prl

#include "blvrun/model_client.hpp"

#include <algorithm>
#include <charconv>
#include <future>

#include <httplib.h>
#include <json.hpp>

namespace blvrun {

namespace {

using Clock = std::chrono::steady_clock;

struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;  // without trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
  constexpr std::string_view kScheme = "http://";
  std::string_view rest(url);
  if (!rest.starts_with(kScheme)) throw std::invalid_argument("endpoint must be an http:// URL: " + url);
  rest.remove_prefix(kScheme.size());
  Endpoint ep;
  auto slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) ep.base_path = std::string(rest.substr(slash));
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();

  std::string_view host = authority;
  if (authority.starts_with('[')) {
    auto close = authority.find(']');
    if (close == std::string_view::npos) throw std::invalid_argument("malformed IPv6 host in endpoint: " + url);
    host = authority.substr(1, close - 1);
    authority.remove_prefix(close + 1);
  } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    authority.remove_prefix(colon);
  } else {
    authority = {};
  }
  if (authority.starts_with(':')) {
    auto digits = authority.substr(1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ep.port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || ep.port < 1 || ep.port > 65535)
      throw std::invalid_argument("invalid port in endpoint: " + url);
  }
  if (host.empty()) throw std::invalid_argument("endpoint has no host: " + url);
  ep.host = std::string(host);
  return ep;
}

void apply_timeouts(httplib::Client& client, std::chrono::milliseconds timeout) {
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_keep_alive(false);
}

// Runs `request` on a worker and stops the client when the deadline passes,
// so a stalled server cannot hold the caller past `limit`.
template <typename Request>
std::optional<httplib::Result> run_bounded(httplib::Client& client, std::chrono::milliseconds limit,
                                           Request request) {
  auto pending = std::async(std::launch::async, [&] { return request(client); });
  if (pending.wait_for(limit) == std::future_status::ready) return pending.get();
  client.stop();
  pending.wait();
  return std::nullopt;
}

}  // namespace

void validate(const BackendConfig& config) {
  if (config.timeout.count() <= 0) throw std::invalid_argument("backend timeout must be positive");
  parse_endpoint(config.endpoint);
}

const char* to_string(ModelError::Kind kind) {
  switch (kind) {
    case ModelError::Kind::Timeout: return "timeout";
    case ModelError::Kind::Unreachable: return "unreachable";
    case ModelError::Kind::Protocol: return "protocol";
  }
  return "unknown";
}

std::string generate(const BackendConfig& config, const std::string& prompt) {
  validate(config);
  auto ep = parse_endpoint(config.endpoint);
  httplib::Client client(ep.host, ep.port);
  apply_timeouts(client, config.timeout);

  nlohmann::json body = {{"model", config.model_name}, {"prompt", prompt}, {"stream", false}};
  const std::string payload = body.dump();
  const std::string path = ep.base_path + "/api/generate";

  auto started = Clock::now();
  auto result = run_bounded(client, config.timeout, [&](httplib::Client& c) {
    return c.Post(path, payload, "application/json");
  });
  if (!result) throw ModelError(ModelError::Kind::Timeout, "no response within " +
                                                               std::to_string(config.timeout.count()) + " ms");
  if (!*result) {
    auto error = result->error();
    auto elapsed = Clock::now() - started;
    if (error == httplib::Error::ConnectionTimeout || elapsed >= config.timeout)
      throw ModelError(ModelError::Kind::Timeout, "request timed out (" + httplib::to_string(error) + ")");
    if (error == httplib::Error::Connection)
      throw ModelError(ModelError::Kind::Unreachable, "cannot connect to " + config.endpoint);
    throw ModelError(ModelError::Kind::Protocol, "request failed: " + httplib::to_string(error));
  }

  const auto& response = **result;
  if (response.status != 200)
    throw ModelError(ModelError::Kind::Protocol, "server answered HTTP " + std::to_string(response.status));
  auto parsed = nlohmann::json::parse(response.body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object())
    throw ModelError(ModelError::Kind::Protocol, "response body is not a JSON object");
  auto field = parsed.find("response");
  if (field == parsed.end() || !field->is_string()) {
    std::string detail = "response has no \"response\" field";
    if (auto err = parsed.find("error"); err != parsed.end() && err->is_string())
      detail += " (server error: " + err->get<std::string>() + ")";
    throw ModelError(ModelError::Kind::Protocol, detail);
  }
  return field->get<std::string>();
}

bool health_check(const BackendConfig& config) {
  try {
    if (config.timeout.count() <= 0) return false;
    auto ep = parse_endpoint(config.endpoint);
    auto limit = std::min(config.timeout, std::chrono::milliseconds(2000));
    httplib::Client client(ep.host, ep.port);
    apply_timeouts(client, limit);
    auto result = run_bounded(client, limit, [&](httplib::Client& c) { return c.Get(ep.base_path + "/"); });
    return result && static_cast<bool>(*result);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace blvrun

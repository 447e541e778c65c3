#include <httplib.h>

#include <progshot/error.hpp>
#include <progshot/gateway.hpp>

namespace progshot {

namespace {

class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string origin, std::string prefix, std::string token, double timeout_s)
      : origin_(std::move(origin)),
        prefix_(std::move(prefix)),
        token_(std::move(token)),
        timeout_s_(timeout_s) {}

  HttpReply post(const std::string& path, const std::string& body) override {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(timeout_s_);
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = client.Post(prefix_ + path, headers, body, "application/json");
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::string token_;
  double timeout_s_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const std::string& base_url,
                                               const std::string& bearer_token,
                                               double timeout_s) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::config_error, "base_url needs a scheme: " + base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  std::string origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return std::make_shared<HttpTransport>(std::move(origin), std::move(prefix), bearer_token,
                                         timeout_s);
}

}  // namespace progshot

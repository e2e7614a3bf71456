// Copyright 2026 The iasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <httplib.h>

#include "iasr/gateway.hpp"

namespace iasr::gateway {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::optional<HttpResponse> to_response(const httplib::Result& res) {
  if (!res) return std::nullopt;
  return HttpResponse{res->status, res->body, res->get_header_value("Content-Type")};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  std::optional<HttpResponse> post_json(const std::string& url, const std::string& body) override {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    configure(client);
    return to_response(client.Post(path, body, "application/json"));
  }

  std::optional<HttpResponse> post_multipart(const std::string& url,
                                             const std::vector<MultipartPart>& parts) override {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    configure(client);
    httplib::MultipartFormDataItems items;
    for (const auto& p : parts) items.push_back({p.name, p.content, p.filename, p.content_type});
    return to_response(client.Post(path, items));
  }

  bool reachable(const std::string& url) override {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::seconds(3));
    client.set_read_timeout(std::chrono::seconds(3));
    return static_cast<bool>(client.Get("/"));
  }

 private:
  void configure(httplib::Client& client) const {
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    if (const char* key = std::getenv("IASR_API_KEY")) client.set_bearer_token_auth(key);
  }

  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

}  // namespace iasr::gateway

#include "silic/remote_provider.hpp"

#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "silic/errors.hpp"
#include "silic/format.hpp"

namespace silic {

struct RemoteProvider::Impl {
    std::string origin; // scheme://host[:port]
    std::string path;   // prefix + /v1/chat/completions
    std::counting_semaphore<1024> slots;

    explicit Impl(std::ptrdiff_t n) : slots(n) {}
};

RemoteProvider::RemoteProvider(RemoteSettings settings, ExchangeLog* log)
    : GuidanceProvider(log), settings_(std::move(settings)) {
    if (settings_.api_key.empty()) {
        if (const char* key = std::getenv("SILIC_API_KEY")) settings_.api_key = key;
    }
    if (trim(settings_.base_url).empty()) throw InvalidConfig("remote provider needs provider.base_url");
    if (settings_.api_key.empty()) throw InvalidConfig("remote provider needs SILIC_API_KEY");
    if (settings_.max_concurrency < 1 || settings_.max_concurrency > 1024) {
        throw InvalidConfig("provider.max_concurrency must be in [1, 1024]");
    }

    impl_ = std::make_unique<Impl>(settings_.max_concurrency);
    std::string url(trim(settings_.base_url));
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw InvalidConfig("provider.base_url must start with http:// or https://");
    const auto slash = url.find('/', scheme + 3);
    impl_->origin = url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    impl_->path = prefix + "/v1/chat/completions";
}

RemoteProvider::~RemoteProvider() = default;

void RemoteProvider::backoff(int attempt) {
    const long long ms = static_cast<long long>(settings_.backoff_initial_ms) << (attempt - 2);
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::string RemoteProvider::respond(const ExchangeRequest& request) {
    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    httplib::Client client(impl_->origin);
    const auto timeout = std::chrono::duration<double>(settings_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_bearer_token_auth(settings_.api_key);

    const nlohmann::json body = {{"model", settings_.model},
                                 {"temperature", 0},
                                 {"messages", {{{"role", "user"}, {"content", request.prompt}}}}};
    auto res = client.Post(impl_->path, body.dump(), "application/json");
    if (!res) throw ProviderUnavailable("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw ProviderUnavailable("HTTP " + std::to_string(res->status) + " from " + impl_->origin + impl_->path);
    }
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderUnavailable(std::string("malformed completion payload: ") + e.what());
    }
}

} // namespace silic

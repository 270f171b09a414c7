#pragma once

#include <memory>
#include <string>

#include "silic/guidance.hpp"

namespace silic {

struct RemoteSettings {
    std::string base_url;   // e.g. https://api.openai.com
    std::string model = "gpt-4o";
    std::string api_key;    // falls back to $SILIC_API_KEY when empty
    double timeout_seconds = 60.0;
    int backoff_initial_ms = 1000; // doubled before each retry
    int max_concurrency = 4;       // in-flight requests across all threads
};

/// Chat-completion client: POST {base_url}/v1/chat/completions with the
/// prompt as a single user message at temperature 0. Throws InvalidConfig
/// when the URL or credential is missing.
class RemoteProvider : public GuidanceProvider {
public:
    RemoteProvider(RemoteSettings settings, ExchangeLog* log = nullptr);
    ~RemoteProvider() override;

    std::string model_name() const override { return settings_.model; }

protected:
    std::string respond(const ExchangeRequest& request) override;
    void backoff(int attempt) override;

private:
    struct Impl;
    RemoteSettings settings_;
    std::unique_ptr<Impl> impl_;
};

} // namespace silic

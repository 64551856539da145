#pragma once

#include "tvsh/errors.hpp"
#include "tvsh/tvs.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace tvsh::llm {

enum class PromptId { Baseline, Attribute, Confidence, StepAware, PhaseAware, Causal };

struct PromptTemplate {
    PromptId id;
    const char* name;
    const char* text;
};

/// Appended to the prompt on the re-query after an ambiguous answer.
inline constexpr const char* kStrictInstruction = "Answer strictly with a single token: YES or NO.";

const PromptTemplate& prompt(PromptId id);
const std::vector<PromptTemplate>& prompts();
/// Accepts the template names baseline, attribute, confidence, step_aware,
/// phase_aware and causal.
PromptId prompt_from_name(const std::string& name);
/// Prompt text, with the strict instruction appended when requested.
std::string prompt_text(PromptId id, bool strict);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Standard base64 of the raw file bytes, no line breaks. Missing, unreadable or
/// empty files raise FileError.
std::string encode_image(const std::filesystem::path& path);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_hex(const std::string& text);

/// Case-insensitive scan for standalone yes/no tokens.
tvs::Verdict parse_verdict(const std::string& text);
/// A number in [0, 1] following "confidence" or "score", else the first decimal in [0, 1].
std::optional<double> parse_confidence(const std::string& text);

struct EndpointConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model_name = "gpt-4o";
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env_var = "TVSH_API_KEY";
    double timeout_s = 60.0;
    int max_retries = 3;
    double retry_backoff_s = 0.5;
    int max_parallel = 1;
    /// 0 disables rate limiting.
    double requests_per_second = 0.0;
    std::filesystem::path cache_dir;
    /// JSON pointer to the answer text inside the response body.
    std::string response_path = "/choices/0/message/content";
    /// Optional JSON request template; string values "{{model}}", "{{prompt}}",
    /// "{{image_a}}" and "{{image_b}}" are substituted (images as data URLs).
    std::string body_template;
    /// Scores below this downgrade a confidence-template verdict to ambiguous.
    double confidence_threshold = 0.5;
    /// Log request and response bodies (image payloads elided) to stderr.
    bool debug = false;
};

struct HttpRequest {
    std::string base_url;
    std::string path;
    std::map<std::string, std::string> headers;
    std::string body;
    double timeout_s = 60.0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Connection-level failure (no HTTP status available).
class TransportError : public Error {
public:
    using Error::Error;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Throws TransportError when no response could be obtained.
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib client; https requires OpenSSL support at build time.
class HttplibTransport final : public Transport {
public:
    HttpResponse post(const HttpRequest& request) override;
};

class TokenBucket {
public:
    /// rate <= 0 never blocks.
    explicit TokenBucket(double rate, double burst = 1.0);
    void acquire();

private:
    using Clock = std::chrono::steady_clock;
    double rate_;
    double burst_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mu_;
};

struct CacheEntry {
    std::string key;
    tvs::Verdict verdict = tvs::Verdict::Ambiguous;
    std::string raw_text;
    std::optional<double> score;
    std::string timestamp;
};

/// One JSON file per key; writes go to a temporary file renamed into place.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);
    std::optional<CacheEntry> load(const std::string& key) const;
    void store(const CacheEntry& entry) const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

/// Content-addressed cache key of one request.
std::string cache_key(const std::string& hash_a, const std::string& hash_b, PromptId id,
                      const std::string& model, bool strict);

/// Chat-completions request body for the given prompt and two base64 images.
std::string build_request_body(const EndpointConfig& cfg, const std::string& prompt,
                               const std::string& image_a_b64, const std::string& image_b_b64,
                               const std::string& mime_a, const std::string& mime_b);
/// Extracts the answer text at cfg.response_path; ProtocolError when the body
/// is not JSON or the pointer does not resolve to a string.
std::string extract_answer(const EndpointConfig& cfg, const std::string& body);

std::string mime_type(const std::filesystem::path& path);

/// Adjacency oracle backed by a multimodal chat endpoint. Frame references in
/// FramePair are image file paths.
class LlmOracle final : public tvs::AdjacencyOracle {
public:
    LlmOracle(EndpointConfig cfg, PromptId prompt, std::shared_ptr<Transport> transport);

    tvs::OracleResponse judge(const tvs::FramePair& pair, bool strict) override;
    tvs::Source source() const noexcept override { return tvs::Source::Oracle; }

    std::size_t network_calls() const noexcept { return network_calls_.load(); }
    std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

private:
    std::string call_endpoint(std::size_t pair_index, const std::string& body);

    EndpointConfig cfg_;
    PromptId prompt_;
    std::shared_ptr<Transport> transport_;
    std::optional<ResponseCache> cache_;
    TokenBucket bucket_;
    std::atomic<std::size_t> network_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace tvsh::llm

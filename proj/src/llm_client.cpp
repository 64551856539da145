#include "tvsh/llm_client.hpp"

#include "tvsh/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

namespace tvsh::llm {

using nlohmann::json;

namespace {

const std::vector<PromptTemplate> kPrompts = {
    {PromptId::Baseline, "baseline",
     "Do these two neighboring frames depict the same human motion? Answer Yes or No."},
    {PromptId::Attribute, "attribute",
     "Carefully compare the two human figures. Focus on body posture, limb angles, contact with "
     "the ground, and movement direction. Ignore lighting, clothing, and background. Decide if "
     "they represent the same stage of an action. Answer Yes or No."},
    {PromptId::Confidence, "confidence",
     "Do these two frames depict the same human motion? Provide your answer (Yes/No) and a "
     "confidence score between 0 and 1."},
    {PromptId::StepAware, "step_aware",
     "Compare frame i and frame i+Δt. Decide whether they correspond to the same stage of "
     "motion despite intermediate movement. Ignore viewpoint and background differences."},
    {PromptId::PhaseAware, "phase_aware",
     "Identify whether these two frames occur in the same phase of an action (preparation, "
     "execution, or completion). Focus on body posture and motion trajectory. Answer Yes or No."},
    {PromptId::Causal, "causal",
     "Analyze how the motion evolves between these two frames. Determine if the second frame "
     "naturally follows from the first as part of the same continuous action. Answer Yes or No."},
};

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

tvs::Verdict verdict_from_string(const std::string& s) {
    if (s == "same") return tvs::Verdict::Same;
    if (s == "different") return tvs::Verdict::Different;
    return tvs::Verdict::Ambiguous;
}

void substitute(json& node, const std::map<std::string, std::string>& vars) {
    if (node.is_string()) {
        auto it = vars.find(node.get<std::string>());
        if (it != vars.end()) node = it->second;
    } else if (node.is_array() || node.is_object()) {
        for (auto& child : node) substitute(child, vars);
    }
}

/// Request body with every data URL payload elided.
std::string elide_images(const std::string& body) {
    static const std::regex data_url("(data:[^;\"]+;base64,)[A-Za-z0-9+/=]+");
    return std::regex_replace(body, data_url, "$1<elided>");
}

}  // namespace

const std::vector<PromptTemplate>& prompts() { return kPrompts; }

const PromptTemplate& prompt(PromptId id) {
    for (const auto& p : kPrompts) {
        if (p.id == id) return p;
    }
    throw InvalidInput("unknown prompt id");
}

PromptId prompt_from_name(const std::string& name) {
    for (const auto& p : kPrompts) {
        if (name == p.name) return p.id;
    }
    throw InvalidInput("unknown prompt template '" + name + "'");
}

std::string prompt_text(PromptId id, bool strict) {
    std::string text = prompt(id).text;
    if (strict) {
        text += ' ';
        text += kStrictInstruction;
    }
    return text;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) return {};
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError(path.string(), "cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw FileError(path.string(), "read failed");
    return bytes;
}

std::string encode_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.empty()) throw FileError(path.string(), "image file is empty");
    return base64_encode(bytes);
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex(std::vector<std::uint8_t>(text.begin(), text.end()));
}

tvs::Verdict parse_verdict(const std::string& text) {
    bool yes = false, no = false;
    std::string token;
    auto flush = [&] {
        if (token == "yes") yes = true;
        else if (token == "no") no = true;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token += static_cast<char>(std::tolower(c));
        } else {
            flush();
        }
    }
    flush();
    if (yes && !no) return tvs::Verdict::Same;
    if (no && !yes) return tvs::Verdict::Different;
    return tvs::Verdict::Ambiguous;
}

std::optional<double> parse_confidence(const std::string& text) {
    static const std::regex keyed(R"((?:confidence|score)[^0-9.]{0,20}(\d*\.?\d+))",
                                  std::regex::icase);
    static const std::regex decimal(R"((?:^|[^0-9.])(\d*\.\d+)(?![0-9.]))");
    std::smatch m;
    if (std::regex_search(text, m, keyed)) {
        const double v = std::stod(m[1].str());
        if (v >= 0.0 && v <= 1.0) return v;
    }
    auto begin = std::sregex_iterator(text.begin(), text.end(), decimal);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const double v = std::stod((*it)[1].str());
        if (v >= 0.0 && v <= 1.0) return v;
    }
    return std::nullopt;
}

TokenBucket::TokenBucket(double rate, double burst)
    : rate_(rate), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)), last_(Clock::now()) {}

void TokenBucket::acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mu_);
    for (;;) {
        const auto now = Clock::now();
        tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rate_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw FileError(dir_.string(), "cannot create cache directory: " + ec.message());
}

std::optional<CacheEntry> ResponseCache::load(const std::string& key) const {
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        const json j = json::parse(in);
        CacheEntry e;
        e.key = j.at("key").get<std::string>();
        if (e.key != key) return std::nullopt;
        e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
        e.raw_text = j.at("raw_text").get<std::string>();
        if (j.contains("score") && j["score"].is_number()) e.score = j["score"].get<double>();
        e.timestamp = j.value("timestamp", "");
        return e;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::store(const CacheEntry& entry) const {
    json j = {{"key", entry.key},
              {"verdict", tvs::to_string(entry.verdict)},
              {"raw_text", entry.raw_text},
              {"timestamp", entry.timestamp}};
    if (entry.score) j["score"] = *entry.score;
    const auto final_path = dir_ / (entry.key + ".json");
    std::ostringstream tmp_name;
    tmp_name << entry.key << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
             << '.' << std::random_device{}();
    const auto tmp_path = dir_ / tmp_name.str();
    {
        std::ofstream out(tmp_path, std::ios::trunc);
        if (!out) throw FileError(tmp_path.string(), "cannot write cache entry");
        out << j.dump(2) << '\n';
        if (!out) throw FileError(tmp_path.string(), "cannot write cache entry");
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) {
        std::filesystem::remove(tmp_path, ec);
        throw FileError(final_path.string(), "cannot publish cache entry");
    }
}

std::string cache_key(const std::string& hash_a, const std::string& hash_b, PromptId id,
                      const std::string& model, bool strict) {
    return sha256_hex(hash_a + '\n' + hash_b + '\n' + prompt(id).name + '\n' + model + '\n' +
                      (strict ? "strict" : "plain"));
}

std::string mime_type(const std::filesystem::path& path) {
    const std::string ext = to_lower(path.extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".webp") return "image/webp";
    if (ext == ".gif") return "image/gif";
    if (ext == ".bmp") return "image/bmp";
    return "application/octet-stream";
}

std::string build_request_body(const EndpointConfig& cfg, const std::string& prompt,
                               const std::string& image_a_b64, const std::string& image_b_b64,
                               const std::string& mime_a, const std::string& mime_b) {
    const std::string url_a = "data:" + mime_a + ";base64," + image_a_b64;
    const std::string url_b = "data:" + mime_b + ";base64," + image_b_b64;
    if (!cfg.body_template.empty()) {
        json body;
        try {
            body = json::parse(cfg.body_template);
        } catch (const json::exception& e) {
            throw InvalidInput(std::string("request body template is not JSON: ") + e.what());
        }
        substitute(body, {{"{{model}}", cfg.model_name},
                          {"{{prompt}}", prompt},
                          {"{{image_a}}", url_a},
                          {"{{image_b}}", url_b}});
        return body.dump();
    }
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", prompt}});
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url_a}}}});
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url_b}}}});
    json body = {{"model", cfg.model_name},
                 {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
    return body.dump();
}

std::string extract_answer(const EndpointConfig& cfg, const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        throw ProtocolError("response body is not valid JSON");
    }
    try {
        const json& v = j.at(json::json_pointer(cfg.response_path));
        if (!v.is_string()) throw ProtocolError("answer at " + cfg.response_path + " is not a string");
        return v.get<std::string>();
    } catch (const json::exception&) {
        throw ProtocolError("response has no answer at " + cfg.response_path);
    }
}

LlmOracle::LlmOracle(EndpointConfig cfg, PromptId prompt, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)),
      prompt_(prompt),
      transport_(std::move(transport)),
      bucket_(cfg_.requests_per_second) {
    if (!transport_) throw InvalidInput("LLM oracle needs a transport");
    if (cfg_.max_retries < 0) throw InvalidInput("max_retries must be nonnegative");
    if (!cfg_.cache_dir.empty()) cache_.emplace(cfg_.cache_dir);
}

std::string LlmOracle::call_endpoint(std::size_t pair_index, const std::string& body) {
    HttpRequest req;
    req.base_url = cfg_.base_url;
    req.path = cfg_.path;
    req.body = body;
    req.timeout_s = cfg_.timeout_s;
    req.headers["Content-Type"] = "application/json";
    if (const char* key = std::getenv(cfg_.api_key_env_var.c_str()); key && *key) {
        req.headers["Authorization"] = std::string("Bearer ") + key;
    }
    if (cfg_.debug) std::cerr << "[llm] request pair " << pair_index << ": " << elide_images(body) << '\n';

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0 && cfg_.retry_backoff_s > 0.0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(cfg_.retry_backoff_s * std::pow(2.0, attempt - 1)));
        }
        bucket_.acquire();
        ++network_calls_;
        try {
            const HttpResponse resp = transport_->post(req);
            if (cfg_.debug) {
                std::cerr << "[llm] response pair " << pair_index << " status " << resp.status
                          << ": " << resp.body << '\n';
            }
            if (resp.status >= 200 && resp.status < 300) return resp.body;
            last_error = "HTTP status " + std::to_string(resp.status);
        } catch (const TransportError& e) {
            last_error = e.what();
        }
    }
    throw OracleUnavailable(pair_index, last_error + " after " +
                                            std::to_string(cfg_.max_retries + 1) + " attempts");
}

tvs::OracleResponse LlmOracle::judge(const tvs::FramePair& pair, bool strict) {
    if (pair.frame_a.empty() || pair.frame_b.empty()) {
        throw OracleUnavailable(pair.index, "frame image paths missing");
    }
    std::vector<std::uint8_t> bytes_a, bytes_b;
    try {
        bytes_a = read_file_bytes(pair.frame_a);
        bytes_b = read_file_bytes(pair.frame_b);
    } catch (const FileError& e) {
        throw OracleUnavailable(pair.index, e.what());
    }
    if (bytes_a.empty() || bytes_b.empty()) {
        throw OracleUnavailable(pair.index, "frame image file is empty");
    }

    const std::string key =
        cache_key(sha256_hex(bytes_a), sha256_hex(bytes_b), prompt_, cfg_.model_name, strict);
    if (cache_) {
        if (auto hit = cache_->load(key)) {
            ++cache_hits_;
            return {hit->verdict, hit->raw_text, hit->score};
        }
    }

    const std::string body =
        build_request_body(cfg_, prompt_text(prompt_, strict), base64_encode(bytes_a),
                           base64_encode(bytes_b), mime_type(pair.frame_a), mime_type(pair.frame_b));
    const std::string answer = extract_answer(cfg_, call_endpoint(pair.index, body));

    tvs::OracleResponse out;
    out.raw_text = answer;
    out.verdict = parse_verdict(answer);
    if (prompt_ == PromptId::Confidence) {
        out.score = parse_confidence(answer);
        if (out.score && *out.score < cfg_.confidence_threshold) out.verdict = tvs::Verdict::Ambiguous;
    }
    if (cache_) cache_->store({key, out.verdict, out.raw_text, out.score, utc_timestamp()});
    return out;
}

}  // namespace tvsh::llm

// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ticl/baselines.hpp"
#include "ticl/errors.hpp"
#include "ticl/rng.hpp"

namespace ticl::baselines {

std::vector<double> HashScorer::embed(const std::string& text) {
  Rng rng(fnv1a64(text, seed_ ^ 0xcbf29ce484222325ULL));
  std::vector<double> v(dim_);
  for (auto& x : v) x = 2.0 * rng.uniform01() - 1.0;
  return v;
}

TfidfScorer::TfidfScorer(std::span<const std::string> background) : model_(lexstats::TfidfModel::fit(background)) {}

std::vector<double> TfidfScorer::embed(const std::string& text) {
  std::vector<double> v(model_.vocabulary_size());
  for (const auto& [idx, w] : model_.transform(text)) v[static_cast<std::size_t>(idx)] = w;
  return v;
}

HttpEmbeddingScorer::HttpEmbeddingScorer(EmbeddingProfile profile)
    : profile_(std::move(profile)), token_(resolve_api_key(profile_.api_key_env)) {
  if (profile_.endpoint_url.empty()) throw ConfigError("embedding profile has no endpoint_url");
}

std::vector<double> HttpEmbeddingScorer::embed(const std::string& text) {
  nlohmann::json body;
  if (!profile_.model_name.empty()) body["model"] = profile_.model_name;
  body[profile_.input_field] = text;
  HttpResponse resp;
  for (int attempt = 0;; ++attempt) {
    try {
      resp = http_post_json(profile_.endpoint_url, token_, body.dump(), profile_.timeout_ms);
    } catch (const TransportError& e) {
      if (!e.transient() || attempt >= profile_.max_retries) throw;
      continue;
    }
    if (resp.status == 200) break;
    if (!is_transient_status(resp.status) || attempt >= profile_.max_retries) {
      throw TransportError("embedding endpoint returned HTTP " + std::to_string(resp.status), resp.status,
                           is_transient_status(resp.status));
    }
  }
  std::vector<double> v;
  try {
    auto doc = nlohmann::json::parse(resp.body);
    v = doc.at(nlohmann::json::json_pointer(profile_.output_path)).get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("embedding response has no vector at ") + profile_.output_path + " (" +
                             e.what() + ")",
                         resp.status, false);
  }
  if (profile_.dimension && v.size() != profile_.dimension) {
    throw ConfigError("embedding has dimension " + std::to_string(v.size()) + "; profile expects " +
                      std::to_string(profile_.dimension));
  }
  return v;
}

double style_score(const std::string& candidate, std::span<const std::string> references, EmbeddingScorer& scorer) {
  if (references.empty()) throw DataError("style_score: no references");
  const auto c = scorer.embed(candidate);
  double sum = 0.0;
  for (const auto& ref : references) {
    const auto r = scorer.embed(ref);
    if (r.size() != c.size()) throw DataError("style_score: embedding dimensions differ");
    double nc = 0.0, nr = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      nc += c[i] * c[i];
      nr += r[i] * r[i];
    }
    if (nc == 0.0 || nr == 0.0) {
      spdlog::warn("style_score: zero-norm embedding from scorer {}; similarity taken as 0", scorer.id());
      continue;
    }
    sum += lexstats::cosine(std::span<const double>(c), std::span<const double>(r));
  }
  return sum / static_cast<double>(references.size());
}

}  // namespace ticl::baselines

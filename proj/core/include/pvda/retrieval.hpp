#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "pvda/dataset.hpp"
#include "pvda/encoder.hpp"

namespace pvda {

// Concatenation of the four part embeddings, innermost ring first; length
// 4 * d_embed.
struct Descriptor {
  Tensor vector;
  std::string source;
};

// Full descending-similarity ordering of the gallery for one query; ties are
// broken by ascending gallery id so results are reproducible.
struct RetrievalResult {
  std::size_t query_index = 0;
  std::vector<std::size_t> ranked;  // gallery indices
  std::vector<double> scores;       // similarity, same order
};

Descriptor extract_descriptor(Encoder& encoder, const ImageSample& sample);
std::vector<Descriptor> extract_descriptors(Encoder& encoder, const Dataset& dataset,
                                            std::size_t eval_batch = 32);

// dot(a,b)/(|a||b|); a zero vector yields similarity 0 with a warning.
double cosine_similarity(const Tensor& a, const Tensor& b);

RetrievalResult rank_gallery(const Descriptor& query, const std::vector<Descriptor>& gallery);

// Fraction of queries whose top-k contains a relevant id. Queries with an
// empty relevant set are excluded (optionally counted via `excluded`).
double recall_at_k(const std::vector<RetrievalResult>& results,
                   const std::vector<std::set<std::size_t>>& relevant, int k,
                   std::size_t* excluded = nullptr);

// AP = (1/|relevant|) * sum over relevant items at rank r of precision@r.
double average_precision(const RetrievalResult& result, const std::set<std::size_t>& relevant);

// Elementwise mean of equal-length descriptors.
Descriptor multi_query_fuse(const std::vector<Descriptor>& descriptors);

enum class Protocol { kUavToSatSingle, kUavToSatMulti, kSatToUav };

Protocol protocol_from_name(const std::string& name);
const char* protocol_name(Protocol p);

struct PerQueryMetrics {
  std::string query_source;
  std::string location;
  std::size_t best_relevant_rank = 0;  // 1-based; 0 when no relevant entry
  double average_precision = 0.0;
};

struct MetricsReport {
  std::string protocol;
  double recall_at_1 = 0.0;
  double recall_at_5 = 0.0;
  double recall_at_10 = 0.0;
  double mean_ap = 0.0;
  std::size_t num_queries = 0;
  std::size_t num_gallery = 0;
  std::size_t excluded_queries = 0;
  std::vector<PerQueryMetrics> per_query;

  std::string to_json() const;
  void write_json(const std::filesystem::path& path) const;
  void write_per_query_csv(const std::filesystem::path& path) const;
};

// Runs the full protocol: descriptor extraction on both sets, (multi-query
// fusion when requested), ranking, and metric reduction. Relevance is
// same-location-name membership; gallery locations absent from the query set
// act as distractors.
MetricsReport evaluate(Encoder& encoder, const Dataset& query_set, const Dataset& gallery_set,
                       Protocol protocol);

// Ranked-result dump for qualitative inspection: per query, the top-k gallery
// sources with scores.
void write_topk_dump(const std::filesystem::path& path, const MetricsReport& report,
                     const std::vector<RetrievalResult>& results,
                     const std::vector<std::string>& query_sources,
                     const std::vector<std::string>& gallery_sources, int k);

// evaluate() variant that also exposes the raw rankings (for dumps).
MetricsReport evaluate_with_results(Encoder& encoder, const Dataset& query_set,
                                    const Dataset& gallery_set, Protocol protocol,
                                    std::vector<RetrievalResult>* results_out,
                                    std::vector<std::string>* query_sources_out,
                                    std::vector<std::string>* gallery_sources_out);

}  // namespace pvda

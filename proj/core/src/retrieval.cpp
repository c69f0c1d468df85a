#include "pvda/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pvda/checkpoint.hpp"
#include "pvda/common.hpp"

namespace pvda {

Descriptor extract_descriptor(Encoder& encoder, const ImageSample& sample) {
  std::vector<ImageSample> one{sample};
  Dataset tmp;
  tmp.samples = std::move(one);
  tmp.image_size = encoder.config().image_size;
  tmp.num_locations = 1;
  auto d = extract_descriptors(encoder, tmp, 1);
  return std::move(d.front());
}

std::vector<Descriptor> extract_descriptors(Encoder& encoder, const Dataset& dataset,
                                            std::size_t eval_batch) {
  require(eval_batch >= 1, "extract_descriptors: eval_batch must be >= 1");
  const auto d_embed = static_cast<std::size_t>(encoder.config().d_embed);
  std::vector<Descriptor> out;
  out.reserve(dataset.size());
  for (std::size_t start = 0; start < dataset.size(); start += eval_batch) {
    const std::size_t count = std::min(eval_batch, dataset.size() - start);
    std::vector<ImageSample> chunk(dataset.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                   dataset.samples.begin() + static_cast<std::ptrdiff_t>(start + count));
    const Tensor x = batch_to_nchw(chunk, encoder.config().image_size);
    EncodeResult enc = encoder.forward(x, nn::Mode::kEval, false);
    for (std::size_t i = 0; i < count; ++i) {
      Descriptor d;
      d.vector = Tensor({4 * d_embed});
      for (std::size_t l = 0; l < 4; ++l)
        for (std::size_t j = 0; j < d_embed; ++j)
          d.vector[l * d_embed + j] = enc.parts.parts[l](i, j);
      d.source = chunk[i].source_path.empty()
                     ? (dataset.location_names.empty()
                            ? std::string("sample_") + std::to_string(start + i)
                            : dataset.location_names[static_cast<std::size_t>(chunk[i].location_id)] +
                                  "/" + view_name(chunk[i].view) + "_" + std::to_string(start + i))
                     : chunk[i].source_path;
      out.push_back(std::move(d));
    }
  }
  return out;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  require(a.numel() == b.numel(), "cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    std::cerr << "[retrieval] warning: zero-norm descriptor, similarity defined as 0\n";
    return 0.0;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievalResult rank_gallery(const Descriptor& query, const std::vector<Descriptor>& gallery) {
  require<DataError>(!gallery.empty(), "rank_gallery: empty gallery");
  RetrievalResult result;
  std::vector<double> sims(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g)
    sims[g] = cosine_similarity(query.vector, gallery[g].vector);
  result.ranked.resize(gallery.size());
  std::iota(result.ranked.begin(), result.ranked.end(), std::size_t{0});
  std::stable_sort(result.ranked.begin(), result.ranked.end(), [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;  // ties: ascending gallery id
  });
  result.scores.resize(gallery.size());
  for (std::size_t r = 0; r < result.ranked.size(); ++r) result.scores[r] = sims[result.ranked[r]];
  return result;
}

double recall_at_k(const std::vector<RetrievalResult>& results,
                   const std::vector<std::set<std::size_t>>& relevant, int k,
                   std::size_t* excluded) {
  require(k >= 1, "recall_at_k: k must be >= 1");
  require(results.size() == relevant.size(), "recall_at_k: results/relevance size mismatch");
  std::size_t hits = 0, counted = 0, skipped = 0;
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    if (relevant[qi].empty()) {
      ++skipped;
      continue;
    }
    ++counted;
    const auto& ranked = results[qi].ranked;
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    for (std::size_t r = 0; r < top; ++r) {
      if (relevant[qi].count(ranked[r])) {
        ++hits;
        break;
      }
    }
  }
  if (excluded) *excluded = skipped;
  if (skipped > 0)
    std::cerr << "[retrieval] warning: " << skipped << " queries with no relevant gallery entry excluded\n";
  return counted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(counted);
}

double average_precision(const RetrievalResult& result, const std::set<std::size_t>& relevant) {
  require(!relevant.empty(), "average_precision: empty relevant set");
  std::size_t found = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < result.ranked.size(); ++r) {
    if (relevant.count(result.ranked[r])) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(r + 1);
    }
  }
  require(found > 0, "average_precision: relevant ids missing from the ranking");
  return sum / static_cast<double>(found);
}

Descriptor multi_query_fuse(const std::vector<Descriptor>& descriptors) {
  require(!descriptors.empty(), "multi_query_fuse: no descriptors");
  const std::size_t len = descriptors.front().vector.numel();
  for (const auto& d : descriptors)
    require(d.vector.numel() == len, "multi_query_fuse: descriptor length mismatch");
  Descriptor fused;
  fused.vector = Tensor({len});
  for (const auto& d : descriptors)
    for (std::size_t i = 0; i < len; ++i) fused.vector[i] += d.vector[i];
  const double inv = 1.0 / static_cast<double>(descriptors.size());
  for (std::size_t i = 0; i < len; ++i) fused.vector[i] *= inv;
  fused.source = "fused(" + std::to_string(descriptors.size()) + ")";
  return fused;
}

Protocol protocol_from_name(const std::string& name) {
  if (name == "uav-to-sat") return Protocol::kUavToSatSingle;
  if (name == "uav-to-sat-multi") return Protocol::kUavToSatMulti;
  if (name == "sat-to-uav") return Protocol::kSatToUav;
  fail<UsageError>("unknown protocol: " + name +
                   " (expected uav-to-sat|uav-to-sat-multi|sat-to-uav)");
}

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kUavToSatSingle: return "uav-to-sat";
    case Protocol::kUavToSatMulti: return "uav-to-sat-multi";
    case Protocol::kSatToUav: return "sat-to-uav";
  }
  return "?";
}

MetricsReport evaluate(Encoder& encoder, const Dataset& query_set, const Dataset& gallery_set,
                       Protocol protocol) {
  return evaluate_with_results(encoder, query_set, gallery_set, protocol, nullptr, nullptr,
                               nullptr);
}

MetricsReport evaluate_with_results(Encoder& encoder, const Dataset& query_set,
                                    const Dataset& gallery_set, Protocol protocol,
                                    std::vector<RetrievalResult>* results_out,
                                    std::vector<std::string>* query_sources_out,
                                    std::vector<std::string>* gallery_sources_out) {
  require<DataError>(!query_set.samples.empty(), "evaluate: empty query set");
  require<DataError>(!gallery_set.samples.empty(), "evaluate: empty gallery set");

  const auto gallery_desc = extract_descriptors(encoder, gallery_set);
  auto query_desc = extract_descriptors(encoder, query_set);

  // Relevance is matched by location name so query and gallery id spaces may
  // differ (the gallery may hold distractor locations).
  std::map<std::string, std::set<std::size_t>> gallery_by_location;
  for (std::size_t g = 0; g < gallery_set.samples.size(); ++g)
    gallery_by_location[gallery_set.location_names[static_cast<std::size_t>(
                            gallery_set.samples[g].location_id)]]
        .insert(g);

  struct QueryEntry {
    Descriptor descriptor;
    std::string location;
    std::string source;
  };
  std::vector<QueryEntry> queries;

  if (protocol == Protocol::kUavToSatMulti) {
    // Group the per-location query descriptors, then fuse each group.
    std::map<std::string, std::vector<Descriptor>> groups;
    for (std::size_t qi = 0; qi < query_set.samples.size(); ++qi) {
      const auto& name =
          query_set.location_names[static_cast<std::size_t>(query_set.samples[qi].location_id)];
      groups[name].push_back(query_desc[qi]);
    }
    for (auto& [name, ds] : groups) {
      QueryEntry e;
      e.descriptor = multi_query_fuse(ds);
      e.location = name;
      e.source = name + "/" + e.descriptor.source;
      queries.push_back(std::move(e));
    }
  } else {
    for (std::size_t qi = 0; qi < query_set.samples.size(); ++qi) {
      QueryEntry e;
      e.descriptor = std::move(query_desc[qi]);
      e.location =
          query_set.location_names[static_cast<std::size_t>(query_set.samples[qi].location_id)];
      e.source = e.descriptor.source;
      queries.push_back(std::move(e));
    }
  }

  std::vector<RetrievalResult> results;
  std::vector<std::set<std::size_t>> relevant;
  results.reserve(queries.size());
  relevant.reserve(queries.size());
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    RetrievalResult r = rank_gallery(queries[qi].descriptor, gallery_desc);
    r.query_index = qi;
    results.push_back(std::move(r));
    const auto it = gallery_by_location.find(queries[qi].location);
    relevant.push_back(it == gallery_by_location.end() ? std::set<std::size_t>{} : it->second);
  }

  MetricsReport report;
  report.protocol = protocol_name(protocol);
  report.num_queries = queries.size();
  report.num_gallery = gallery_set.samples.size();
  report.recall_at_1 = recall_at_k(results, relevant, 1, &report.excluded_queries);
  report.recall_at_5 = recall_at_k(results, relevant, 5);
  report.recall_at_10 = recall_at_k(results, relevant, 10);

  double ap_sum = 0.0;
  std::size_t ap_count = 0;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    PerQueryMetrics pq;
    pq.query_source = queries[qi].source;
    pq.location = queries[qi].location;
    if (!relevant[qi].empty()) {
      pq.average_precision = average_precision(results[qi], relevant[qi]);
      for (std::size_t r = 0; r < results[qi].ranked.size(); ++r) {
        if (relevant[qi].count(results[qi].ranked[r])) {
          pq.best_relevant_rank = r + 1;
          break;
        }
      }
      ap_sum += pq.average_precision;
      ++ap_count;
    }
    report.per_query.push_back(std::move(pq));
  }
  report.mean_ap = ap_count == 0 ? 0.0 : ap_sum / static_cast<double>(ap_count);

  if (results_out) *results_out = std::move(results);
  if (query_sources_out) {
    query_sources_out->clear();
    for (const auto& q : queries) query_sources_out->push_back(q.source);
  }
  if (gallery_sources_out) {
    gallery_sources_out->clear();
    for (const auto& g : gallery_desc) gallery_sources_out->push_back(g.source);
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["protocol"] = protocol;
  j["R@1"] = recall_at_1;
  j["R@5"] = recall_at_5;
  j["R@10"] = recall_at_10;
  j["AP"] = mean_ap;
  j["num_queries"] = num_queries;
  j["num_gallery"] = num_gallery;
  j["excluded_queries"] = excluded_queries;
  return j.dump(2);
}

void MetricsReport::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require<RuntimeFailure>(out.good(), "cannot write metrics: " + path.string());
  out << to_json() << "\n";
}

void MetricsReport::write_per_query_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require<RuntimeFailure>(out.good(), "cannot write per-query csv: " + path.string());
  out << "query,location,best_relevant_rank,average_precision\n";
  for (const auto& pq : per_query)
    out << pq.query_source << ',' << pq.location << ',' << pq.best_relevant_rank << ','
        << format_double(pq.average_precision) << "\n";
}

void write_topk_dump(const std::filesystem::path& path, const MetricsReport& report,
                     const std::vector<RetrievalResult>& results,
                     const std::vector<std::string>& query_sources,
                     const std::vector<std::string>& gallery_sources, int k) {
  std::ofstream out(path);
  require<RuntimeFailure>(out.good(), "cannot write ranked-result dump: " + path.string());
  out << "protocol " << report.protocol << "\n";
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    out << query_sources[qi] << "\n";
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                  results[qi].ranked.size());
    for (std::size_t r = 0; r < top; ++r)
      out << "  " << (r + 1) << ". " << gallery_sources[results[qi].ranked[r]] << "  "
          << format_double(results[qi].scores[r]) << "\n";
  }
}

}  // namespace pvda

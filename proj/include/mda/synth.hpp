#pragma once

#include "mda/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mda {

/// Parameters of the seeded multi-domain corpus generator.
///
/// Each document of class y in domain d contains every signal token of class
/// y independently with probability `signal_emission`, every signal token of
/// another class with probability `signal_leak`, and every background token
/// of d with probability `background_emission`. Neutral tokens shared by all
/// domains then pad the document up to a length drawn uniformly from
/// [doc_length_min, doc_length_max]; a document whose emitted tokens already
/// exceed that length is left as is.
struct SynthSpec {
    std::size_t k = 2;
    std::size_t m = 2;
    std::vector<std::vector<double>> priors;  // m rows, each on the k-simplex
    std::size_t signal_tokens_per_class = 12;
    double signal_emission = 0.35;
    double signal_leak = 0.0;
    std::size_t background_tokens_per_domain = 30;
    double background_emission = 0.5;
    std::size_t neutral_tokens = 200;
    std::size_t doc_length_min = 20;
    std::size_t doc_length_max = 60;
    std::size_t docs_per_domain = 100;
    std::uint64_t seed = 0;

    void validate() const;

    std::string signal_token(std::size_t cls, std::size_t i) const;
    std::string background_token(std::size_t domain, std::size_t i) const;
    std::string neutral_token(std::size_t i) const;
    std::string label_name(std::size_t cls) const;
    std::string domain_name(std::size_t domain) const;
};

/// Benchmark used throughout the acceptance suite: 4 classes, 4 domains of
/// 1500 documents, each domain favoring one class (0.55 vs 0.15).
SynthSpec default_benchmark_spec();

Corpus generate_corpus(const SynthSpec& spec);

std::string synth_spec_to_json(const SynthSpec& spec);
/// Missing keys keep their defaults.
SynthSpec synth_spec_from_json(const std::string& text);

}  // namespace mda

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "neuroevo/config.hpp"
#include "neuroevo/genome.hpp"
#include "neuroevo/history.hpp"

namespace neuroevo {

// Genome documents. Parsing checks format_version first (anything other
// than kFormatVersion raises UnsupportedVersionError), then the published
// schema (ParseError with the field path), then the genome invariants
// (StructureError).
nlohmann::json genome_to_json(const Genome& g);
Genome genome_from_json(const nlohmann::json& doc);
std::string serialize_genome(const Genome& g);
Genome parse_genome(std::string_view text);
void save_genome(const Genome& g, const std::filesystem::path& path);
Genome load_genome(const std::filesystem::path& path);

// Config files mirror EvolutionConfig. Missing keys keep their defaults;
// unknown keys and wrongly typed values raise ConfigError naming the key.
nlohmann::json config_to_json(const EvolutionConfig& config);
EvolutionConfig config_from_json(const nlohmann::json& doc);
EvolutionConfig load_config(const std::filesystem::path& path);

nlohmann::json history_to_json(const HistoryArchive& history);
HistoryArchive history_from_json(const nlohmann::json& doc);
std::string serialize_history(const HistoryArchive& history);
HistoryArchive parse_history(std::string_view text);
void export_history(const HistoryArchive& history, const std::filesystem::path& path);
HistoryArchive import_history(const std::filesystem::path& path);

// Throws ParseError for the first schema violation.
void validate_genome_document(const nlohmann::json& doc);
void validate_history_document(const nlohmann::json& doc);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

} // namespace neuroevo

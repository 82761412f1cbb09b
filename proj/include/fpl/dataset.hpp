#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fpl/patch_sampler.hpp"

namespace fpl {

enum class Split { Train, Test };

std::string_view split_name(Split s);

struct DatasetEntry {
    std::filesystem::path path;
    Label label = Label::Live;
    std::string scanner;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<DatasetEntry> entries;
};

// Expects root/{train,test}/{live,spoof}/ with PNG or PGM images; labels
// and splits come from the directory names, the scanner name from the root
// directory. Deterministic path-sorted order.
DatasetManifest ingest_dataset(const std::filesystem::path& root);

// "train/live/img7.png" -> "train_live_img7"; used to key patches back to
// their source fingerprint.
std::string source_id_for(const std::filesystem::path& root,
                          const std::filesystem::path& image_path);

}  // namespace fpl

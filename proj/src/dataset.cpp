#include "fpl/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace fpl {

std::string_view split_name(Split s) {
    return s == Split::Train ? "train" : "test";
}

namespace {

bool is_image_file(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm";
}

}  // namespace

DatasetManifest ingest_dataset(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) {
        throw std::runtime_error("missing dataset root: " + root.string());
    }
    DatasetManifest manifest;
    manifest.root = root;
    const std::string scanner = root.filename().string();

    for (Split split : {Split::Train, Split::Test}) {
        for (Label label : {Label::Live, Label::Spoof}) {
            const auto dir =
                root / std::string(split_name(split)) / std::string(label_name(label));
            if (!std::filesystem::is_directory(dir)) {
                throw std::runtime_error(
                    "missing subdirectory: " + std::string(split_name(split)) + "/" +
                    std::string(label_name(label)));
            }
            for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
                if (e.is_regular_file() && is_image_file(e.path())) {
                    manifest.entries.push_back({e.path(), label, scanner, split});
                }
            }
        }
    }
    if (manifest.entries.empty()) {
        throw std::runtime_error("zero images under " + root.string());
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) {
                  return a.path.generic_string() < b.path.generic_string();
              });
    return manifest;
}

std::string source_id_for(const std::filesystem::path& root,
                          const std::filesystem::path& image_path) {
    std::string rel =
        std::filesystem::relative(image_path, root).replace_extension().generic_string();
    for (char& c : rel) {
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    }
    return rel;
}

}  // namespace fpl

#ifndef SEMADV_CONFIG_HPP
#define SEMADV_CONFIG_HPP

// Campaign configuration: JSON in, validated struct out, stable round trip.

#include <cstdint>
#include <string>

#include "semadv/attack_lm.hpp"
#include "semadv/attack_st.hpp"

namespace semadv {

struct CampaignConfig {
    uint64_t seed = 7;
    bool seed_defaulted = false;  // echoed in the manifest
    std::string setting;          // label; derived from the attack fields when empty
    std::string dataset_dir;
    std::string denoiser_path;
    std::string target_path;
    std::string surrogate_path;
    std::string extractor_path;
    std::string attack = "st";  // "st" | "lm"
    int count = 50;
    int jobs = 1;
    int kid_subset_size = 25;
    int kid_subsets = 20;
    STConfig st;
    LMConfig lm;

    void validate() const;
    std::string setting_label() const;
};

CampaignConfig parse_config_text(const std::string& json_text);
CampaignConfig parse_config_file(const std::string& path);
std::string serialize_config(const CampaignConfig& cfg);

// enum <-> string helpers shared by config parsing and the CLI
FineTuneMode mode_from_string(const std::string& s);
BoxSetting box_from_string(const std::string& s);
MaskStrategy strategy_from_string(const std::string& s);
MapMethod method_from_string(const std::string& s);
std::string to_string(FineTuneMode m);
std::string to_string(BoxSetting b);
std::string to_string(MaskStrategy s);
std::string to_string(MapMethod m);

}  // namespace semadv

#endif  // SEMADV_CONFIG_HPP

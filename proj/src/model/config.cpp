#include "ccs/model/config.hpp"

#include "ccs/errors.hpp"
#include "ccs/json_fields.hpp"

namespace ccs::model {

void ModelConfig::validate() const {
  const auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ParameterError(std::string("model config: ") + name + " must be positive");
  };
  positive(n_pc, "n_pc");
  positive(d_a, "d_a");
  positive(d_l, "d_l");
  positive(d_e, "d_e");
  positive(slots, "slots");
  positive(heads, "heads");
  positive(k, "k");
  positive(noise_dim, "noise_dim");
  positive(ctf_stages, "ctf_stages");
  if (max_parts < 2) throw ParameterError("model config: max_parts must be at least 2");
  if (!(noise_scale >= 0)) throw ParameterError("model config: noise_scale must be non-negative");
  for (auto w : encoder_widths) positive(w, "encoder_widths");
  for (auto w : predictor_widths) positive(w, "predictor_widths");
  workspace_dims().validate();
  loss.validate();
}

workspace::WorkspaceDims ModelConfig::workspace_dims() const { return {slots, d_l, d_a, d_e, heads}; }

nlohmann::json to_json(const ModelConfig& c) {
  return {{"n_pc", c.n_pc},
          {"d_a", c.d_a},
          {"d_l", c.d_l},
          {"d_e", c.d_e},
          {"slots", c.slots},
          {"heads", c.heads},
          {"stages", c.stages},
          {"k", c.k},
          {"noise_dim", c.noise_dim},
          {"noise_scale", c.noise_scale},
          {"ctf_stages", c.ctf_stages},
          {"max_parts", c.max_parts},
          {"encoder_widths", c.encoder_widths},
          {"predictor_widths", c.predictor_widths},
          {"loss",
           {{"w_c", c.loss.collision},
            {"w_t", c.loss.translation},
            {"w_r", c.loss.rotation},
            {"w_s", c.loss.shape},
            {"C", c.loss.C},
            {"epsilon_d", c.loss.epsilon_d},
            {"clamp_collision", c.loss.clamp_collision}}}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  namespace jf = json_fields;
  const std::string ctx = "model";
  jf::expect_object(j, ctx);
  jf::reject_unknown(j,
                     {"n_pc", "d_a", "d_l", "d_e", "slots", "heads", "stages", "k", "noise_dim", "noise_scale",
                      "ctf_stages", "max_parts", "encoder_widths", "predictor_widths", "loss"},
                     ctx);
  ModelConfig c;
  jf::read(j, "n_pc", c.n_pc, ctx);
  jf::read(j, "d_a", c.d_a, ctx);
  jf::read(j, "d_l", c.d_l, ctx);
  jf::read(j, "d_e", c.d_e, ctx);
  jf::read(j, "slots", c.slots, ctx);
  jf::read(j, "heads", c.heads, ctx);
  jf::read(j, "stages", c.stages, ctx);
  jf::read(j, "k", c.k, ctx);
  jf::read(j, "noise_dim", c.noise_dim, ctx);
  jf::read(j, "noise_scale", c.noise_scale, ctx);
  jf::read(j, "ctf_stages", c.ctf_stages, ctx);
  jf::read(j, "max_parts", c.max_parts, ctx);
  jf::read(j, "encoder_widths", c.encoder_widths, ctx);
  jf::read(j, "predictor_widths", c.predictor_widths, ctx);
  if (auto it = j.find("loss"); it != j.end()) {
    const std::string lctx = "model.loss";
    jf::expect_object(*it, lctx);
    jf::reject_unknown(*it, {"w_c", "w_t", "w_r", "w_s", "C", "epsilon_d", "clamp_collision"}, lctx);
    jf::read(*it, "w_c", c.loss.collision, lctx);
    jf::read(*it, "w_t", c.loss.translation, lctx);
    jf::read(*it, "w_r", c.loss.rotation, lctx);
    jf::read(*it, "w_s", c.loss.shape, lctx);
    jf::read(*it, "C", c.loss.C, lctx);
    jf::read(*it, "epsilon_d", c.loss.epsilon_d, lctx);
    jf::read(*it, "clamp_collision", c.loss.clamp_collision, lctx);
  }
  return c;
}

}  // namespace ccs::model

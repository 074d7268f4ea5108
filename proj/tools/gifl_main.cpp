#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gifl/checkpoint.hpp"
#include "gifl/dataset.hpp"
#include "gifl/error.hpp"
#include "gifl/metrics.hpp"
#include "gifl/model.hpp"
#include "gifl/training.hpp"

namespace fs = std::filesystem;
using namespace gifl;

namespace {

struct CommonModelFlags {
  int enc_patch = 8;
  std::int64_t enc_dim = 32;
  int enc_layers = 2;
  int enc_heads = 4;
  std::uint64_t enc_seed = 7;
  std::string encoder_path;  // optional pretrained archive

  int uflt_layers = 2;
  int uflt_heads = 4;
  std::string variant = "dual";
  std::string scope = "per_token";
  int window = 2;

  int image_size = 448;
  std::uint64_t seed = 0;
  bool deterministic = false;
};

void add_model_flags(CLI::App* cmd, CommonModelFlags& f) {
  cmd->add_option("--size", f.image_size, "working resolution (images resized to size x size)");
  cmd->add_option("--seed", f.seed, "global seed")->envname("GIFL_SEED");
  cmd->add_flag("--deterministic", f.deterministic, "single-threaded, bit-reproducible execution");
  cmd->add_option("--encoder", f.encoder_path, "load encoder weights from a checkpoint archive");
  cmd->add_option("--enc-patch", f.enc_patch, "encoder patch size");
  cmd->add_option("--enc-dim", f.enc_dim, "encoder embedding dim");
  cmd->add_option("--enc-layers", f.enc_layers, "encoder depth");
  cmd->add_option("--enc-heads", f.enc_heads, "encoder attention heads");
  cmd->add_option("--enc-seed", f.enc_seed, "seed of the random frozen encoder");
  cmd->add_option("--uflt-layers", f.uflt_layers, "UFLT depth");
  cmd->add_option("--uflt-heads", f.uflt_heads, "UFLT attention heads");
  cmd->add_option("--variant", f.variant, "dual | spatial_only | spectral_only");
  cmd->add_option("--scope", f.scope, "per_token | token_windows | full_grid");
  cmd->add_option("--window", f.window, "token window for the token_windows scope");
}

SpectralScope scope_from_flags(const CommonModelFlags& f) {
  if (f.scope == "per_token") return SpectralScope::per_token();
  if (f.scope == "token_windows") return SpectralScope::token_windows(f.window);
  if (f.scope == "full_grid") return SpectralScope::full_grid();
  throw_config("unknown scope: " + f.scope);
}

Model model_from_flags(const CommonModelFlags& f, const UFLTConfig& ucfg) {
  EncoderConfig ecfg;
  ecfg.patch = f.enc_patch;
  ecfg.dim = f.enc_dim;
  ecfg.layers = f.enc_layers;
  ecfg.heads = f.enc_heads;
  ecfg.image_size = f.image_size;
  ecfg.seed = f.enc_seed;

  Model model = build_model(ecfg, ucfg);
  if (!f.encoder_path.empty()) {
    Archive ar = load_archive(f.encoder_path);
    model.encoder = encoder_from_arrays(ecfg, ar.arrays);
  }
  return model;
}

std::pair<int, int> parse_ratio(const std::string& s) {
  if (s == "0") return {1, 0};
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw_config("ratio must look like 1:1 (forged:authentic) or 0");
  const int f = std::stoi(s.substr(0, colon));
  const int a = std::stoi(s.substr(colon + 1));
  if (f <= 0 || a < 0) throw_config("invalid ratio: " + s);
  return {f, a};
}

void write_resolved_config(CLI::App* cmd, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream f(fs::path(out_dir) / "resolved_config.ini", std::ios::binary);
  f << cmd->config_to_str(true, false);
}

void print_param_table(const std::string& name, const ParamCountReport& rep, double reference_m) {
  std::printf("%s\n", name.c_str());
  for (const auto& it : rep.items) {
    std::printf("  %-44s %15lld\n", it.component.c_str(), static_cast<long long>(it.params));
  }
  std::printf("  %-44s %15lld  (%.1f M)\n", "total", static_cast<long long>(rep.total),
              static_cast<double>(rep.total) / 1e6);
  std::printf("  %-44s %14.1f G\n", "flops_estimate (forward)", rep.flops_g);
  if (reference_m > 0.0) {
    const double delta = (static_cast<double>(rep.total) / 1e6 - reference_m) / reference_m * 100.0;
    std::printf("  %-44s %14.1f M  (delta %+.2f%%)\n", "reference", reference_m, delta);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"gifl: generalizable image forgery localization toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an ini config file");

  // make-toy
  auto* toy = app.add_subcommand("make-toy", "generate a procedural toy corpus (sources + mask bank)");
  std::string toy_out = "toy";
  int toy_count = 16;
  int toy_size = 64;
  std::uint64_t toy_seed = 0;
  toy->add_option("--out", toy_out, "output directory")->required();
  toy->add_option("--count", toy_count, "number of source images / masks");
  toy->add_option("--img-size", toy_size, "side of the generated images");
  toy->add_option("--seed", toy_seed, "seed")->envname("GIFL_SEED");

  // build-dataset
  auto* build = app.add_subcommand("build-dataset",
                                   "construct a forgery dataset from sources and a mask bank");
  BuildDatasetConfig bcfg;
  std::string methods_csv = "noise_fill,smooth_fill,copy_move,splice";
  std::string ratio_str = "1:1";
  std::string masking_str = "off";
  std::string fullgen_str = "on";
  build->add_option("--sources", bcfg.sources_dir, "directory of source images")->required();
  build->add_option("--masks", bcfg.masks_dir, "directory of mask images")->required();
  build->add_option("--out", bcfg.out_dir, "output directory")->required();
  build->add_option("--methods", methods_csv, "comma-separated forgery methods");
  build->add_option("--neg-ratio", ratio_str, "forged:authentic ratio (e.g. 1:1, 2:1, 1:2, 0)");
  build->add_option("--masking", masking_str, "on|off: blend generator output with the original");
  build->add_option("--full-generation", fullgen_str,
                    "on|off: whole-image re-encode for generator methods");
  build->add_option("--size", bcfg.image_size, "dataset resolution");
  build->add_option("--split", bcfg.split, "split tag written to the manifest");
  build->add_option("--seed", bcfg.seed, "seed")->envname("GIFL_SEED");

  // train
  auto* train = app.add_subcommand("train", "train UFLT + decoder on a manifest");
  CommonModelFlags tf;
  std::string train_manifest, train_out = "run";
  std::string option = "baseline";
  TrainSpec tspec;
  train->add_option("--manifest", train_manifest, "training manifest")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--option", option, "experiment option: baseline, I..IX, data-VI..data-XI");
  train->add_option("--steps", tspec.steps, "optimization steps");
  train->add_option("--batch", tspec.batch, "batch size");
  train->add_option("--lr", tspec.lr, "Adam learning rate");
  train->add_option("--checkpoint-every", tspec.checkpoint_every,
                    "checkpoint cadence in steps (0 = final only)");
  add_model_flags(train, tf);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over a manifest");
  std::string eval_manifest, eval_ckpt, eval_out = "report.csv";
  int eval_size = 0;
  bool eval_det = false;
  eval->add_option("--manifest", eval_manifest, "evaluation manifest")->required();
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval->add_option("--out", eval_out, "report CSV path");
  eval->add_option("--size", eval_size, "override working resolution (default: encoder's)");
  eval->add_flag("--deterministic", eval_det, "single-threaded execution");

  // predict
  auto* pred = app.add_subcommand("predict", "run one image through a checkpoint");
  std::string pred_ckpt, pred_image, pred_out = "pred";
  pred->add_option("--checkpoint", pred_ckpt, "model checkpoint")->required();
  pred->add_option("--image", pred_image, "input image")->required();
  pred->add_option("--out", pred_out, "output directory");

  // degrade
  auto* deg = app.add_subcommand("degrade",
                                 "apply one degradation to every forged image of a manifest");
  std::string deg_manifest, deg_kind = "jpeg", deg_out = "degraded";
  DegradationSpec dspec;
  deg->add_option("--manifest", deg_manifest, "input manifest")->required();
  deg->add_option("--kind", deg_kind,
                  "jpeg | resize_cycle | sharpen | mean_blur | motion_blur | gamma | iso_noise");
  deg->add_option("--out", deg_out, "output directory")->required();
  deg->add_option("--jpeg-quality", dspec.jpeg_quality, "jpeg quality factor");
  deg->add_option("--blur-kernel", dspec.blur_kernel, "blur kernel size");
  deg->add_option("--gamma", dspec.gamma, "gamma factor");
  deg->add_option("--iso-color-shift", dspec.iso_color_shift, "iso noise color shift");
  deg->add_option("--iso-intensity", dspec.iso_intensity, "iso noise intensity");
  deg->add_option("--seed", dspec.seed, "seed")->envname("GIFL_SEED");

  // param-count
  auto* pc = app.add_subcommand("param-count", "report parameter counts and a FLOP estimate");
  std::string preset = "vit-l-encoder";
  int pc_res = 448;
  pc->add_option("--preset", preset, "vit-l-encoder | uflt-l-predictor | uflt-b-predictor | tiny");
  pc->add_option("--resolution", pc_res, "resolution for the FLOP estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 2;
  }

  if (toy->parsed()) {
    make_toy_sources((fs::path(toy_out) / "sources").string(), toy_count, toy_size, toy_seed);
    make_toy_mask_bank((fs::path(toy_out) / "masks").string(), toy_count, toy_size, toy_seed + 1);
    write_resolved_config(toy, toy_out);
    std::printf("wrote %d sources and %d masks under %s\n", toy_count, toy_count, toy_out.c_str());
    return 0;
  }

  if (build->parsed()) {
    bcfg.methods.clear();
    std::stringstream ss(methods_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) bcfg.methods.push_back(forgery_method_from_string(tok));
    }
    bcfg.negative_ratio = parse_ratio(ratio_str);
    bcfg.masking = masking_str == "on";
    bcfg.full_generation = fullgen_str != "off";
    BuildDatasetResult res = build_dataset(bcfg);
    write_resolved_config(build, bcfg.out_dir);
    std::printf("manifest: %s (%zu records)\n", res.manifest_path.c_str(), res.manifest.size());
    std::printf("%s", stats_table(bcfg.split, res.stats).c_str());
    return 0;
  }

  if (train->parsed()) {
    if (tf.deterministic) set_threads(1);
    UFLTConfig ucfg;  // geometry from flags, variant/scope possibly overridden by the option
    ucfg.layers = tf.uflt_layers;
    ucfg.dim = tf.enc_dim;
    ucfg.heads = tf.uflt_heads;
    ucfg.patch = tf.enc_patch;
    ucfg.variant = uflt_variant_from_string(tf.variant);
    ucfg.scope = scope_from_flags(tf);
    ucfg.seed = tf.seed;

    TrainSpec spec = tspec;
    apply_ablation("baseline", spec, ucfg);
    ucfg.variant = uflt_variant_from_string(tf.variant);
    ucfg.scope = scope_from_flags(tf);
    if (option != "baseline") apply_ablation(option, spec, ucfg);
    spec.steps = tspec.steps;
    spec.batch = tspec.batch;
    spec.lr = tspec.lr;
    spec.checkpoint_every = tspec.checkpoint_every;
    spec.image_size = tf.image_size;
    spec.seed = tf.seed;

    Model model = model_from_flags(tf, ucfg);
    DatasetManifest manifest = read_manifest(train_manifest);
    TrainResult res = train_loop(spec, model, manifest, train_out);
    write_resolved_config(train, train_out);
    std::printf("checkpoint: %s\n", res.checkpoint_path.c_str());
    std::printf("loss log:   %s\n", res.loss_log_path.c_str());
    if (!res.losses.empty()) std::printf("final loss: %.6f\n", res.losses.back().total);
    return 0;
  }

  if (eval->parsed()) {
    if (eval_det) set_threads(1);
    Model model = load_model(eval_ckpt);
    const int size = eval_size > 0 ? eval_size : model.encoder_cfg.image_size;
    if (size != model.encoder_cfg.image_size) {
      throw_version("checkpoint encoder expects resolution " +
                    std::to_string(model.encoder_cfg.image_size) + " (config hash " +
                    hash_hex(json_hash(model_config_json(model))) + ")");
    }
    DatasetManifest manifest = read_manifest(eval_manifest);
    MetricReport rep = evaluate(manifest, model, size);
    write_report(rep, eval_out);
    std::printf("report: %s\n", eval_out.c_str());
    for (const auto& agg : rep.per_method) {
      std::printf("AGG:%s n=%d f1=%.4f iou=%.4f acc=%.4f\n", agg.method.c_str(), agg.count,
                  agg.loc.f1, agg.loc.iou, agg.loc.acc);
    }
    if (!rep.authentic.empty()) {
      std::printf("authentic p-ACC=%.4f i-ACC=%.4f\n", rep.p_acc_mean, rep.i_acc);
    }
    if (!rep.failed.empty()) {
      std::fprintf(stderr, "%zu item(s) failed\n", rep.failed.size());
      return 1;
    }
    return 0;
  }

  if (pred->parsed()) {
    Model model = load_model(pred_ckpt);
    Image img = load_image(pred_image, model.encoder_cfg.image_size);
    Prediction p = predict(img, model);
    fs::create_directories(pred_out);
    const std::string stem = fs::path(pred_image).stem().string();
    save_png(p.prob, (fs::path(pred_out) / (stem + "_prob.png")).string());
    save_png(p.mask, (fs::path(pred_out) / (stem + "_mask.png")).string());
    std::ofstream rec(fs::path(pred_out) / "predictions.csv", std::ios::app);
    char line[512];
    std::snprintf(line, sizeof(line), "%s,%.4f,%s\n", pred_image.c_str(), p.image_score,
                  p.image_score >= 0.5 ? "forged" : "authentic");
    rec << line;
    std::printf("image_score=%.4f (%s)\n", p.image_score,
                p.image_score >= 0.5 ? "forged" : "authentic");
    return 0;
  }

  if (deg->parsed()) {
    dspec.kind = degrade_kind_from_string(deg_kind);
    DatasetManifest manifest = read_manifest(deg_manifest);
    fs::create_directories(fs::path(deg_out) / "images");
    DatasetManifest out_manifest;
    std::uint64_t idx = 0;
    for (auto rec : manifest) {
      if (rec.forged) {
        Image img = load_image(rec.image_path, 0);
        DegradationSpec item_spec = dspec;
        item_spec.seed = dspec.seed ^ (0x9e3779b97f4a7c15ULL * (idx + 1));
        Image out = degrade(img, item_spec);
        // Stored losslessly; the jpeg kind already applied its codec pass.
        const std::string path =
            (fs::path(deg_out) / "images" / fs::path(rec.image_path).filename()).string();
        save_png(out, path);
        rec.image_path = path;
      }
      out_manifest.push_back(rec);
      ++idx;
    }
    write_manifest(out_manifest, (fs::path(deg_out) / "manifest.tsv").string());
    write_resolved_config(deg, deg_out);
    std::printf("degraded manifest: %s\n", (fs::path(deg_out) / "manifest.tsv").string().c_str());
    return 0;
  }

  if (pc->parsed()) {
    if (preset == "vit-l-encoder") {
      EncoderConfig cfg;
      cfg.name = "vit-l";
      cfg.patch = 14;
      cfg.dim = 1024;
      cfg.layers = 24;
      cfg.heads = 16;
      cfg.image_size = pc_res;
      print_param_table("encoder vit-l (patch 14, dim 1024, 24 layers)", count_encoder_params(cfg),
                        304.4);
    } else if (preset == "uflt-l-predictor") {
      UFLTConfig cfg;
      cfg.layers = 24;
      cfg.dim = 1024;
      cfg.heads = 16;
      cfg.patch = 14;
      cfg.variant = UfltVariant::Dual;
      print_param_table("predictor uflt-l dual + fc decoder", count_uflt_params(cfg, true, pc_res),
                        718.0);
    } else if (preset == "uflt-b-predictor") {
      UFLTConfig cfg;
      cfg.layers = 12;
      cfg.dim = 768;
      cfg.heads = 12;
      cfg.patch = 14;
      cfg.variant = UfltVariant::Dual;
      print_param_table("predictor uflt-b dual + fc decoder", count_uflt_params(cfg, true, pc_res),
                        0.0);
    } else if (preset == "tiny") {
      UFLTConfig cfg;
      cfg.layers = 2;
      cfg.dim = 32;
      cfg.heads = 4;
      cfg.patch = 8;
      print_param_table("predictor tiny dual + fc decoder", count_uflt_params(cfg, true, 64), 0.0);
    } else {
      throw_config("unknown preset: " + preset);
    }
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

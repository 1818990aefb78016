#include "sgdqn/sgdqn.h"

#include <cstring>
#include <string>

#include "sgdqn/app/commands.hpp"
#include "sgdqn/errors.hpp"

struct sgdqn_config {
  sgdqn::RunConfig value;
};

struct sgdqn_policy {
  std::unique_ptr<sgdqn::eval::Policy> value;
};

namespace {

thread_local std::string g_last_error;

sgdqn_status fail(sgdqn_status status, const char* message) {
  g_last_error = message;
  return status;
}

// Maps exceptions onto status codes. Order matters: ShapeError derives from
// InvalidArgument.
template <class F>
sgdqn_status guarded(F&& f) {
  try {
    return f();
  } catch (const sgdqn::ShapeError& e) {
    return fail(SGDQN_ERR_SHAPE, e.what());
  } catch (const sgdqn::InvalidArgument& e) {
    return fail(SGDQN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const sgdqn::InvalidState& e) {
    return fail(SGDQN_ERR_INVALID_STATE, e.what());
  } catch (const sgdqn::IoError& e) {
    return fail(SGDQN_ERR_IO, e.what());
  } catch (const sgdqn::FormatError& e) {
    return fail(SGDQN_ERR_FORMAT, e.what());
  } catch (const std::exception& e) {
    return fail(SGDQN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SGDQN_ERR_INTERNAL, "unknown exception");
  }
}

sgdqn_status copy_out(const std::string& s, char* buffer, std::size_t capacity, std::size_t* length) {
  if (length) *length = s.size();
  if (!buffer) return capacity == 0 ? SGDQN_OK : fail(SGDQN_ERR_INVALID_ARGUMENT, "null buffer");
  if (capacity == 0) return fail(SGDQN_ERR_BUFFER_TOO_SMALL, "zero-capacity buffer");
  const std::size_t n = std::min(s.size(), capacity - 1);
  std::memcpy(buffer, s.data(), n);
  buffer[n] = '\0';
  if (n < s.size()) return fail(SGDQN_ERR_BUFFER_TOO_SMALL, "buffer too small");
  return SGDQN_OK;
}

#define SGDQN_REQUIRE(ptr) \
  if (!(ptr)) return fail(SGDQN_ERR_INVALID_ARGUMENT, #ptr " is null")

sgdqn::app::Progress wrap(sgdqn_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* sgdqn_version(void) { return SGDQN_VERSION_STRING; }

const char* sgdqn_status_string(sgdqn_status status) {
  switch (status) {
    case SGDQN_OK: return "ok";
    case SGDQN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SGDQN_ERR_INVALID_STATE: return "invalid state";
    case SGDQN_ERR_IO: return "i/o error";
    case SGDQN_ERR_FORMAT: return "format error";
    case SGDQN_ERR_SHAPE: return "shape mismatch";
    case SGDQN_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case SGDQN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sgdqn_last_error(void) { return g_last_error.c_str(); }

sgdqn_status sgdqn_config_create(sgdqn_config** out) {
  SGDQN_REQUIRE(out);
  return guarded([&] {
    *out = new sgdqn_config{};
    return SGDQN_OK;
  });
}

void sgdqn_config_destroy(sgdqn_config* config) { delete config; }

sgdqn_status sgdqn_config_load(sgdqn_config* config, const char* path) {
  SGDQN_REQUIRE(config);
  SGDQN_REQUIRE(path);
  return guarded([&] {
    config->value = sgdqn::load_config(path, config->value);
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_config_set(sgdqn_config* config, const char* key, const char* value) {
  SGDQN_REQUIRE(config);
  SGDQN_REQUIRE(key);
  SGDQN_REQUIRE(value);
  return guarded([&] {
    sgdqn::set_config_value(config->value, key, value);
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_config_validate(const sgdqn_config* config) {
  SGDQN_REQUIRE(config);
  return guarded([&] {
    config->value.validate();
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_config_get(const sgdqn_config* config, const char* key, char* buffer, size_t capacity,
                              size_t* length) {
  SGDQN_REQUIRE(config);
  SGDQN_REQUIRE(key);
  return guarded([&] { return copy_out(sgdqn::get_config_value(config->value, key), buffer, capacity, length); });
}

sgdqn_status sgdqn_config_format(const sgdqn_config* config, char* buffer, size_t capacity, size_t* length) {
  SGDQN_REQUIRE(config);
  return guarded([&] { return copy_out(sgdqn::format_config(config->value), buffer, capacity, length); });
}

size_t sgdqn_config_key_count(void) { return sgdqn::config_keys().size(); }

const char* sgdqn_config_key(size_t index) {
  static const std::vector<std::string> keys = sgdqn::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

sgdqn_status sgdqn_train(const sgdqn_config* config, sgdqn_progress_fn progress, void* user,
                         sgdqn_train_result* out) {
  SGDQN_REQUIRE(config);
  return guarded([&] {
    const auto s = sgdqn::app::train_command(config->value, wrap(progress, user));
    if (out) {
      *out = sgdqn_train_result{};
      out->episodes = s.episodes;
      out->has_validation = s.last_validation.has_value();
      if (s.last_validation) {
        out->last_success = s.last_validation->success_rate;
        out->last_collision = s.last_validation->collision_rate;
      }
      if (s.selected_validation) {
        out->selected_episode = s.selected_validation->episode;
        out->selected_success = s.selected_validation->success_rate;
      }
      std::strncpy(out->checkpoint_hash, s.checkpoint_hash.c_str(), sizeof out->checkpoint_hash - 1);
    }
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_evaluate(const sgdqn_config* config, const char* checkpoint, int export_trajectories,
                            int export_attention, sgdqn_metrics* out) {
  SGDQN_REQUIRE(config);
  return guarded([&] {
    sgdqn::app::EvaluateOptions options;
    options.checkpoint = opt(checkpoint);
    options.export_trajectories = export_trajectories != 0;
    options.export_attention = export_attention != 0;
    const auto s = sgdqn::app::evaluate_command(config->value, options);
    if (out) {
      const auto& m = s.metrics;
      *out = sgdqn_metrics{m.cases,     m.success,    m.collision,  m.timeout,
                           m.nav_time, m.disc_rate, m.avg_return, m.run_time_ms};
    }
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_export_trajectory(const sgdqn_config* config, const char* checkpoint, size_t case_index,
                                     const char* out_path, size_t* rows) {
  SGDQN_REQUIRE(config);
  SGDQN_REQUIRE(out_path);
  return guarded([&] {
    const auto n = sgdqn::app::export_trajectory_command(config->value, opt(checkpoint), case_index, out_path);
    if (rows) *rows = n;
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_inspect_attention(const sgdqn_config* config, const char* checkpoint, size_t case_index,
                                     size_t step, const char* out_path, size_t* rows) {
  SGDQN_REQUIRE(config);
  SGDQN_REQUIRE(out_path);
  return guarded([&] {
    const auto n =
        sgdqn::app::inspect_attention_command(config->value, opt(checkpoint), case_index, step, out_path);
    if (rows) *rows = n;
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_predict_train(const sgdqn_config* config, sgdqn_progress_fn progress, void* user,
                                 sgdqn_predictor_result* out) {
  SGDQN_REQUIRE(config);
  return guarded([&] {
    const auto s = sgdqn::app::predict_train_command(config->value, wrap(progress, user));
    if (out) {
      *out = sgdqn_predictor_result{s.train_samples, s.heldout_samples, s.untrained_ade, s.heldout_ade,
                                    s.constant_velocity_ade};
    }
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_policy_create(const sgdqn_config* config, const char* checkpoint, sgdqn_policy** out) {
  SGDQN_REQUIRE(config);
  SGDQN_REQUIRE(out);
  return guarded([&] {
    config->value.validate();
    *out = new sgdqn_policy{sgdqn::app::make_policy(config->value, opt(checkpoint))};
    return SGDQN_OK;
  });
}

void sgdqn_policy_destroy(sgdqn_policy* policy) { delete policy; }

sgdqn_status sgdqn_policy_decide(sgdqn_policy* policy, const double robot[9], const double* pedestrians,
                                 size_t count, size_t* action) {
  SGDQN_REQUIRE(policy);
  SGDQN_REQUIRE(robot);
  SGDQN_REQUIRE(action);
  if (count > 0 && !pedestrians) return fail(SGDQN_ERR_INVALID_ARGUMENT, "pedestrians is null");
  return guarded([&] {
    sgdqn::sim::JointState s;
    s.robot.position = {robot[0], robot[1]};
    s.robot.velocity = {robot[2], robot[3]};
    s.robot.radius = robot[4];
    s.robot.goal = {robot[5], robot[6]};
    s.robot.preferred_speed = robot[7];
    s.robot.heading = robot[8];
    for (size_t i = 0; i < count; ++i) {
      const double* p = pedestrians + 5 * i;
      s.pedestrians.push_back({{p[0], p[1]}, {p[2], p[3]}, p[4]});
    }
    *action = policy->value->decide(s);
    return SGDQN_OK;
  });
}

sgdqn_status sgdqn_action_info(size_t action, double preferred_speed, double* speed, double* heading) {
  return guarded([&] {
    const auto actions = sgdqn::sim::build_action_space(preferred_speed);
    if (action >= actions.size()) {
      throw sgdqn::InvalidArgument("action index " + std::to_string(action) + " is out of range");
    }
    if (speed) *speed = actions[action].speed;
    if (heading) *heading = actions[action].heading;
    return SGDQN_OK;
  });
}

}  // extern "C"

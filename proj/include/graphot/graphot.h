#ifndef GRAPHOT_H
#define GRAPHOT_H

#include <stddef.h>
#include <stdint.h>

#if defined(GRAPHOT_BUILDING_LIBRARY)
#define GRAPHOT_API __attribute__((visibility("default")))
#else
#define GRAPHOT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum graphot_status {
  GRAPHOT_OK = 0,
  GRAPHOT_E_LABEL = 1,
  GRAPHOT_E_SHAPE = 2,
  GRAPHOT_E_NUMERIC = 3,
  GRAPHOT_E_CONTRACT = 4,
  GRAPHOT_E_VALIDATION = 5,
  GRAPHOT_E_ASSUMPTION = 6,
  GRAPHOT_E_CAPACITY = 7,
  GRAPHOT_E_IO = 8,
  GRAPHOT_E_ARGUMENT = 9,
  GRAPHOT_E_INTERNAL = 10
} graphot_status;

typedef enum graphot_command {
  GRAPHOT_CMD_SOLVE = 0,
  GRAPHOT_CMD_BENCH = 1,
  GRAPHOT_CMD_VALIDATE = 2
} graphot_command;

typedef struct graphot_spec graphot_spec;
typedef struct graphot_tree graphot_tree;
typedef struct graphot_result graphot_result;

GRAPHOT_API const char* graphot_version(void);
/* Message of the last failed call on this thread ("" if none). */
GRAPHOT_API const char* graphot_last_error(void);
GRAPHOT_API const char* graphot_status_name(graphot_status s);

/* Problem-spec documents. */
GRAPHOT_API graphot_status graphot_spec_load_file(const char* path, graphot_spec** out);
GRAPHOT_API graphot_status graphot_spec_load_string(const char* json, graphot_spec** out);
GRAPHOT_API void graphot_spec_free(graphot_spec* spec);
GRAPHOT_API graphot_status graphot_spec_set_threads(graphot_spec* spec, int threads);
GRAPHOT_API graphot_status graphot_spec_set_seed(graphot_spec* spec, uint64_t seed);
GRAPHOT_API graphot_status graphot_spec_set_output(graphot_spec* spec, const char* path);
GRAPHOT_API graphot_status graphot_spec_set_log_domain(graphot_spec* spec, int enabled);
GRAPHOT_API graphot_status graphot_spec_set_max_iter(graphot_spec* spec, long max_iter);

/* Runs a command; data goes to the configured output, diagnostics to
 * stderr. *exit_code receives 0 (converged / valid), 2 (iteration limit) or
 * 1 (invalid input or failure). */
GRAPHOT_API graphot_status graphot_run(const graphot_spec* spec, graphot_command cmd, int* exit_code);

/* Tree problems built in memory. Costs are row-major over (first, second)
 * endpoint of an edge. */
GRAPHOT_API graphot_status graphot_tree_create(double epsilon, graphot_tree** out);
GRAPHOT_API void graphot_tree_free(graphot_tree* tree);
GRAPHOT_API graphot_status graphot_tree_add_node(graphot_tree* tree, int id, size_t size);
GRAPHOT_API graphot_status graphot_tree_add_edge(graphot_tree* tree, int first, int second,
                                                 const double* cost, size_t len);
GRAPHOT_API graphot_status graphot_tree_set_marginal(graphot_tree* tree, int id, const double* mu,
                                                     size_t len);
GRAPHOT_API graphot_status graphot_tree_validate(const graphot_tree* tree);
GRAPHOT_API graphot_status graphot_tree_solve(const graphot_tree* tree, double delta_prime, long max_iter,
                                              int threads, graphot_result** out);

GRAPHOT_API void graphot_result_free(graphot_result* result);
GRAPHOT_API int graphot_result_converged(const graphot_result* result);
GRAPHOT_API long graphot_result_iterations(const graphot_result* result);
GRAPHOT_API double graphot_result_residual(const graphot_result* result);
GRAPHOT_API double graphot_result_cost(const graphot_result* result);
GRAPHOT_API double graphot_result_rounded_cost(const graphot_result* result);
GRAPHOT_API double graphot_result_iteration_bound(const graphot_result* result);
GRAPHOT_API size_t graphot_result_num_plans(const graphot_result* result);
/* Copies the rounded plan of edge `edge` into out[0..len); len must equal
 * the plan size. */
GRAPHOT_API graphot_status graphot_result_plan(const graphot_result* result, size_t edge, double* out,
                                               size_t len);

#ifdef __cplusplus
}
#endif

#endif

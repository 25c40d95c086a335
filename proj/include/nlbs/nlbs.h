#ifndef NLBS_NLBS_H
#define NLBS_NLBS_H

#include <stddef.h>

#if defined(NLBS_BUILDING_LIBRARY)
#define NLBS_API __attribute__((visibility("default")))
#else
#define NLBS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every entry point returns a status. On failure a one-line message is
 * available from nlbs_last_error() on the calling thread. */
typedef enum nlbs_status {
  NLBS_OK = 0,
  NLBS_INVALID_ARGUMENT,
  NLBS_NOT_EXPANDABLE,
  NLBS_UNSUPPORTED_DELTA,
  NLBS_QUADRATURE_DIVERGED,
  NLBS_NO_IMPLIED_VOL,
  NLBS_SINGULAR_TRIDIAGONAL,
  NLBS_NON_CONVERGENCE,
  NLBS_EMPTY_DOMAIN,
  NLBS_BRACKET_FAIL,
  NLBS_NON_MONOTONE_PRICE,
  NLBS_MISSING_COLUMN,
  NLBS_BAD_NUMBER,
  NLBS_EMPTY_FILE,
  NLBS_CROSSED_QUOTE,
  NLBS_IO,
  NLBS_INTERNAL
} nlbs_status;

typedef enum nlbs_option_kind { NLBS_CALL = 0, NLBS_PUT } nlbs_option_kind;
typedef enum nlbs_model_kind { NLBS_LINEAR = 0, NLBS_FREY_PATIE, NLBS_RAPM } nlbs_model_kind;
typedef enum nlbs_method { NLBS_FROZEN = 0, NLBS_NM1, NLBS_NM2 } nlbs_method;
typedef enum nlbs_derivative_mode { NLBS_ANALYTIC = 0, NLBS_FINITE_DIFFERENCE } nlbs_derivative_mode;
typedef enum nlbs_format { NLBS_CSV = 0, NLBS_JSON } nlbs_format;
typedef enum nlbs_reference { NLBS_REF_CLOSED_FORM = 0, NLBS_REF_FINEST_SELF } nlbs_reference;
typedef enum nlbs_ladder_constraint { NLBS_DIFFUSIVE_RATIO = 0, NLBS_LINEAR_RATIO } nlbs_ladder_constraint;
typedef enum nlbs_engine { NLBS_ENGINE_ASYM = 0, NLBS_ENGINE_NEWTON } nlbs_engine;
typedef enum nlbs_anchor { NLBS_BID_ANCHORED = 0, NLBS_MID_ANCHORED } nlbs_anchor;

typedef struct nlbs_market {
  double sigma_tilde;
  double r;
  double q;
  double strike;
  double maturity;
  nlbs_option_kind kind;
} nlbs_market;

/* parameter is rho (Frey-Patie) or mu (RAPM); ignored for the linear model. */
typedef struct nlbs_model {
  nlbs_model_kind kind;
  double parameter;
  double clamp_floor;
} nlbs_model;

/* The time horizon of a grid is the market maturity. */
typedef struct nlbs_grid {
  double S_max;
  int M;
  int N;
} nlbs_grid;

typedef struct nlbs_solver {
  nlbs_method method;
  nlbs_derivative_mode derivative_mode;
  double tol;
  int max_iter;
  double first_level_guess;
} nlbs_solver;

/* endpoint_power_p = 0 picks the exponent from delta. */
typedef struct nlbs_quadrature {
  double abs_tol;
  double rel_tol;
  int max_subdivisions;
  double endpoint_power_p;
} nlbs_quadrature;

typedef struct nlbs_ladder {
  nlbs_grid base;
  int levels;
  double space_ratio;
  nlbs_ladder_constraint constraint;
} nlbs_ladder;

typedef struct nlbs_calibration_options {
  nlbs_engine engine;
  nlbs_anchor anchor;
  double bracket_hi;
  double price_tol;
  double width_tol;
  int max_iter;
  int newton_M;
  int newton_N;
  nlbs_solver solver;
  nlbs_quadrature quad;
} nlbs_calibration_options;

typedef struct nlbs_quote {
  double tau;
  double S;
  double bid;
  double ask;
  double strike;
  double r;
  double q;
} nlbs_quote;

typedef struct nlbs_calibration_result {
  double sigma_impl;
  double rho_star;
  int iterations;
  double residual;
  nlbs_engine engine;
} nlbs_calibration_result;

/* Absent rates and errors are NaN. */
typedef struct nlbs_record {
  double dS;
  double dtau;
  double err_linf;
  double eoc_linf;
  double err_l2;
  double eoc_l2;
  double wall_time;
  double eotc;
} nlbs_record;

typedef struct nlbs_sweep_row {
  int M;
  int N;
  double parameter;
  double rel_diff_linf;
} nlbs_sweep_row;

typedef struct nlbs_report nlbs_report;
typedef struct nlbs_table nlbs_table;
typedef struct nlbs_sweep nlbs_sweep;
typedef struct nlbs_series nlbs_series;

NLBS_API const char* nlbs_last_error(void);
NLBS_API const char* nlbs_status_name(nlbs_status status);

NLBS_API void nlbs_market_defaults(nlbs_market* out);
NLBS_API void nlbs_model_defaults(nlbs_model* out);
NLBS_API void nlbs_grid_defaults(nlbs_grid* out);
NLBS_API void nlbs_solver_defaults(nlbs_solver* out);
NLBS_API void nlbs_quadrature_defaults(nlbs_quadrature* out);
NLBS_API void nlbs_ladder_defaults(nlbs_ladder* out);
NLBS_API void nlbs_calibration_defaults(nlbs_calibration_options* out);

/* Closed-form linear price. */
NLBS_API nlbs_status nlbs_price_bs(const nlbs_market* mkt, double S, double tau, double* price);
/* V0 + eps V1; quad may be NULL. */
NLBS_API nlbs_status nlbs_price_asymptotic(const nlbs_model* model, const nlbs_market* mkt, double S,
                                           double tau, const nlbs_quadrature* quad, double* price);
NLBS_API nlbs_status nlbs_implied_vol(const nlbs_market* mkt, double S, double tau, double price,
                                      double* sigma);

/* Path "-" or NULL writes to stdout in every writer below. */
NLBS_API nlbs_status nlbs_solve(const nlbs_model* model, const nlbs_market* mkt,
                                const nlbs_grid* grid, const nlbs_solver* solver,
                                nlbs_report** out);
NLBS_API size_t nlbs_report_size(const nlbs_report* report);
NLBS_API const double* nlbs_report_slice(const nlbs_report* report);
NLBS_API size_t nlbs_report_levels(const nlbs_report* report);
NLBS_API const int* nlbs_report_iterations(const nlbs_report* report);
NLBS_API double nlbs_report_wall_time(const nlbs_report* report);
NLBS_API size_t nlbs_report_clamp_events(const nlbs_report* report);
NLBS_API int nlbs_report_diagonally_dominant(const nlbs_report* report);
/* Interpolated price at S. */
NLBS_API nlbs_status nlbs_report_price_at(const nlbs_report* report, double S, double* price);
/* CSV: S,V rows. JSON: slice, iterations per level, residual traces and diagnostics. */
NLBS_API nlbs_status nlbs_report_write(const nlbs_report* report, nlbs_format format,
                                       int include_timing, const char* path);
/* CSV level,iterations (levels numbered from 1). */
NLBS_API nlbs_status nlbs_report_write_iterations(const nlbs_report* report, const char* path);
NLBS_API void nlbs_report_free(nlbs_report* report);

/* A table is returned even when a level fails; nlbs_table_failure then
 * reports the error that stopped the ladder. */
NLBS_API nlbs_status nlbs_eoc(const nlbs_model* model, const nlbs_market* mkt,
                              const nlbs_ladder* ladder, const nlbs_solver* solver,
                              nlbs_reference reference, nlbs_table** out);
NLBS_API nlbs_status nlbs_eotc(const nlbs_model* model, const nlbs_market* mkt,
                               const nlbs_ladder* ladder, const nlbs_solver* solver,
                               int asymptotic, int repetitions, nlbs_table** out);
NLBS_API size_t nlbs_table_rows(const nlbs_table* table);
NLBS_API nlbs_status nlbs_table_row(const nlbs_table* table, size_t index, nlbs_record* out);
NLBS_API nlbs_status nlbs_table_failure(const nlbs_table* table);
NLBS_API const char* nlbs_table_failure_message(const nlbs_table* table);
NLBS_API nlbs_status nlbs_table_write(const nlbs_table* table, nlbs_format format,
                                      int include_timing, const char* path);
NLBS_API void nlbs_table_free(nlbs_table* table);

NLBS_API nlbs_status nlbs_compare(const nlbs_market* mkt, double S_max, const int* grid_sizes,
                                  size_t n_sizes, const double* params, size_t n_params,
                                  nlbs_model_kind family, const nlbs_solver* solver,
                                  const nlbs_quadrature* quad, nlbs_sweep** out);
NLBS_API size_t nlbs_sweep_rows(const nlbs_sweep* sweep);
NLBS_API nlbs_status nlbs_sweep_row_at(const nlbs_sweep* sweep, size_t index, nlbs_sweep_row* out);
NLBS_API nlbs_status nlbs_sweep_write(const nlbs_sweep* sweep, nlbs_format format,
                                      const char* path);
NLBS_API void nlbs_sweep_free(nlbs_sweep* sweep);

NLBS_API nlbs_status nlbs_calibrate(const nlbs_quote* quote, const nlbs_calibration_options* opts,
                                    nlbs_calibration_result* out);
/* Rows fail independently; a bad file fails the whole call. */
NLBS_API nlbs_status nlbs_calibrate_file(const char* quotes_path,
                                         const nlbs_calibration_options* opts,
                                         nlbs_series** out);
NLBS_API size_t nlbs_series_rows(const nlbs_series* series);
/* Returns the row's own status; out is filled only on NLBS_OK. */
NLBS_API nlbs_status nlbs_series_row(const nlbs_series* series, size_t index,
                                     nlbs_calibration_result* out);
NLBS_API const char* nlbs_series_row_message(const nlbs_series* series, size_t index);
NLBS_API nlbs_status nlbs_series_write(const nlbs_series* series, nlbs_format format,
                                       const char* path);
NLBS_API void nlbs_series_free(nlbs_series* series);

#ifdef __cplusplus
}
#endif

#endif

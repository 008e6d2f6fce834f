/* SPDX-License-Identifier: Apache-2.0 */
/* Compiles the public header as C and exercises a handle round trip. */
#include <math.h>
#include <stdio.h>

#include "mgbound/mgbound.h"

int main(void) {
  mgb_model* m = NULL;
  mgb_path* p = NULL;
  double s = 0.0;
  size_t n = 0;
  if (mgb_model_equal_weights(16, &m) != MGB_OK) return 1;
  if (mgb_simulate_path(m, 1, 0, &p) != MGB_OK) return 1;
  if (mgb_path_steps(p, &n) != MGB_OK || n != 16) return 1;
  if (mgb_path_sq_bracket(p, &s) != MGB_OK || fabs(s - 1.0) > 1e-12) return 1;
  mgb_path_free(p);
  mgb_model_free(m);
  if (mgb_model_equal_weights(3, &m) != MGB_ERR_CONFIG) return 1;
  printf("%s\n", mgb_last_error());
  return 0;
}

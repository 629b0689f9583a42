#include <stdio.h>
#include <string.h>
#include "akt.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    AktStatus s_ = (call);                                                     \
    if (s_ != AKT_STATUS_OK) {                                                 \
      fprintf(stderr, "%s failed: %d %s\n", #call, (int)s_,                    \
              akt_last_error_message());                                       \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  double lo[2] = {0.0, 0.0}, hi[2] = {4.0, 4.0}, v[2] = {0.0, 0.0};
  AktConfig *cfg = NULL;
  AktReport *rep = NULL;
  CHECK(akt_config_sample_binomial(2, lo, hi, 8, 1, &cfg));
  CHECK(akt_run(cfg, v, 2, &rep));
  size_t owned = 0;
  for (size_t i = 0; i < akt_report_cell_count(rep); i++) {
    double a[2], b[2];
    int64_t owner;
    CHECK(akt_report_cell(rep, i, a, b, &owner));
    if (owner >= 0) {
      double vol = (b[0] - a[0]) * (b[1] - a[1]);
      if (vol < 2.0 - 1e-9 || vol > 2.0 + 1e-9) {
        fprintf(stderr, "cell %zu volume %g\n", i, vol);
        return 1;
      }
      owned++;
    }
  }
  if (owned != 8) {
    fprintf(stderr, "owned %zu\n", owned);
    return 1;
  }
  double x;
  if (akt_chernoff_bound(1.0, 3.0, &x) != AKT_STATUS_INVALID_ARGUMENT ||
      akt_last_error_message() == NULL) {
    fprintf(stderr, "expected invalid argument\n");
    return 1;
  }
  akt_report_free(rep);
  akt_config_free(cfg);
  printf("ok %s\n", akt_version());
  return 0;
}

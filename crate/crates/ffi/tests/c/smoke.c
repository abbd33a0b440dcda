#include <math.h>
#include <stdio.h>
#include "uavsec.h"

int main(void) {
    double beta[4];
    if (uavsec_fekete_points(4, beta) != UAVSEC_STATUS_OK) return 1;
    if (fabs(beta[1] + 0.4472135954999579) > 1e-9) return 2;

    UavsecConfig *cfg = NULL;
    if (uavsec_config_reference(&cfg) != UAVSEC_STATUS_OK) return 3;
    if (uavsec_config_set(cfg, "array.bogus=1") != UAVSEC_STATUS_UNKNOWN_KEY) return 4;
    char msg[256];
    if (uavsec_last_error_message(msg, sizeof msg) == 0) return 5;
    uavsec_config_free(cfg);

    double h_re[2] = {1.0, 0.0}, h_im[2] = {0.0, 1.0};
    double w_re[2], w_im[2], power;
    if (uavsec_solve_precoding(h_re, h_im, 1, 2, 10.0, 1.0, INFINITY, INFINITY, w_re, w_im, &power)
        != UAVSEC_STATUS_OK) return 6;
    if (fabs(power - 5.0) > 1e-6) return 7;
    printf("ok %s\n", uavsec_version());
    return 0;
}

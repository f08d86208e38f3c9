#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ngrc_control.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        NgrcStatus s_ = (call);                                            \
        if (s_ != NGRC_STATUS_OK) {                                        \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,        \
                    ngrc_last_error());                                    \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    NgrcModelHandle *model = NULL;
    CHECK(ngrc_model_train_henon(1, 0.0, 10, 50, &model));

    double w[7];
    CHECK(ngrc_model_weights(model, w, 7));
    printf("w_u=%.6f c=%.6f y=%.6f x2=%.6f\n", w[0], w[1], w[3], w[4]);
    if (fabs(w[4] + 1.4) > 1e-6) {
        return 2;
    }

    NgrcTraceHandle *trace = NULL;
    CHECK(ngrc_closed_loop(model, NGRC_TASK_PU1_TO_PU2, 0.0, 0.0, 20, 7, &trace));
    NgrcTraceRow row;
    CHECK(ngrc_trace_row(trace, ngrc_trace_len(trace) - 1, &row));
    printf("final x=%.6f x_des=%.6f escaped=%d\n", row.x, row.x_des, (int)ngrc_trace_escaped(trace));
    if (fabs(row.e) > 1e-9) {
        return 3;
    }

    if (ngrc_trace_row(trace, 1000, &row) != NGRC_STATUS_INVALID_ARGUMENT || strlen(ngrc_last_error()) == 0) {
        return 4;
    }

    ngrc_trace_free(trace);
    ngrc_model_free(model);
    return 0;
}

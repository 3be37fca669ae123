/* Compiled as plain C: proves the public header is C-consumable and the
 * basic call discipline (status codes, last-error, handle lifetime) works
 * without any C++ in the client. Returns 0 on success, the failing step
 * otherwise. */

#include <gesturelab/gesturelab.h>

#include <string.h>

int capi_c_smoke(void) {
  glab_dataset* ds = NULL;
  char* info = NULL;
  glab_status st;

  if (glab_version() == NULL || glab_version()[0] == '\0') return 1;
  if (strcmp(glab_status_name(GLAB_OK), "ok") != 0) return 2;
  if (strcmp(glab_status_name(GLAB_IO), "io") != 0) return 3;

  st = glab_dataset_load("no/such/dataset/dir", &ds);
  if (st == GLAB_OK) return 4;
  if (glab_last_error()[0] == '\0') return 5;

  st = glab_dataset_generate(
      "{\"rhythms_train\":1,\"rhythms_val\":1,\"styles\":1,\"frames\":24,\"seed\":3}", &ds);
  if (st != GLAB_OK) return 6;
  if (ds == NULL) return 7;

  st = glab_dataset_info(ds, &info);
  if (st != GLAB_OK) return 8;
  if (info == NULL || strstr(info, "\"frames\": 24") == NULL) return 9;
  glab_string_free(info);

  st = glab_dataset_generate("{\"bogus_key\":1}", &ds);
  if (st != GLAB_INVALID_ARGUMENT) return 10;
  if (strstr(glab_last_error(), "bogus_key") == NULL) return 11;

  st = glab_dataset_generate("not json at all", &ds);
  if (st != GLAB_INVALID_ARGUMENT) return 12;

  glab_dataset_free(ds);
  return 0;
}

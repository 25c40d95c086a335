#include <stdio.h>

#include "nlbs/nlbs.h"

int main(void) {
  nlbs_market mkt;
  double price = 0.0;
  nlbs_market_defaults(&mkt);
  if (nlbs_price_bs(&mkt, 100.0, mkt.maturity, &price) != NLBS_OK) {
    fprintf(stderr, "%s\n", nlbs_last_error());
    return 1;
  }
  printf("%.10f\n", price);
  return price > 4.72 && price < 4.73 ? 0 : 1;
}

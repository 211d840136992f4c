# Data-side modules: replay format, match store, synthetic data and exporters

# Signal processing, feature extraction and on-disk formats

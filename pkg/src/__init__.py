# spikeseq: MEA recording classification
# Spike-sequence features and sequence classifiers

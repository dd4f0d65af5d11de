# Pipeline stage nodes for the preprocessing graph

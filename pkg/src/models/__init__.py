# Recording, signal and experiment schemas

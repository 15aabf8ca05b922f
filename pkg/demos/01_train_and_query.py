"""
Training word vectors and asking them questions
===============================================

A small generated corpus where every ``x{i} : y{i}`` pair shares one
relation, so vector arithmetic should recover it.
"""

from crtk.embedding import TrainConfig, analogy_eval, load_model, most_similar, save_model, similarity, train
from crtk.synthetic import analogy_corpus

streams, quads = analogy_corpus()
print(len(quads), "analogy quads, e.g.", quads[0])

# subsampling is off: on a vocabulary this small every word counts as frequent
config = TrainConfig(vector_size=50, window=5, epochs=5, min_count=1, subsample_t=0)
model = train(streams, config)
print(model)

# cosine similarity and nearest neighbours
print("x0 ~ y0:", round(similarity(model, "x0", "y0"), 3))
print("x0 ~ x1:", round(similarity(model, "x0", "x1"), 3))
print("neighbours of x0:", most_similar(model, ["x0"], k=4))

# y1 - x1 + x2 should land on y2
print("y1 - x1 + x2 ->", most_similar(model, ["y1", "x2"], ["x1"], k=1))
print("top-1 accuracy:", analogy_eval(model, quads).accuracy)

# the model file round-trips exactly
save_model(model, "demo_model.crem")
again = load_model("demo_model.crem")
print("identical after reload:", (again.input_vectors == model.input_vectors).all())

"""Figure recipes over the marangoni CLI's delimited outputs."""

__version__ = "0.1.0"

from .recipes import RECIPES, FigureRecipe, RecipeError, render

__all__ = ["RECIPES", "FigureRecipe", "RecipeError", "render", "__version__"]

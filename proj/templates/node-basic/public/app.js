// Front-end logic goes here.
